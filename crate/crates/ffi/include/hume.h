#ifndef HUME_H
#define HUME_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HumeStatus {
  HUME_STATUS_OK = 0,
  HUME_STATUS_NULL_POINTER = 1,
  HUME_STATUS_INVALID_UTF8 = 2,
  HUME_STATUS_PARSE = 3,
  HUME_STATUS_INVALID_GRAPH = 4,
  HUME_STATUS_INVALID_ANNOTATION = 5,
  HUME_STATUS_UNDEFINED_SCORE = 6,
  HUME_STATUS_UNDEFINED_STATISTIC = 7,
  HUME_STATUS_BUFFER_TOO_SMALL = 8,
  HUME_STATUS_PANIC = 9,
} HumeStatus;

/**
 * A word alignment with known source and target lengths.
 */
typedef struct HumeAlignment HumeAlignment;

/**
 * A validated sentence graph.
 */
typedef struct HumeGraph HumeGraph;

typedef struct HumeScoreResult {
  double value;
  uint64_t green;
  uint64_t orange;
  uint64_t red;
  uint64_t adequate;
  uint64_t bad;
  uint64_t units;
} HumeScoreResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *hume_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *hume_version(void);

/**
 * Parse and validate a graph document.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum HumeStatus hume_graph_parse(const char *json, struct HumeGraph **out);

/**
 * # Safety
 * `graph` must come from [`hume_graph_parse`] and not be used afterwards.
 */
void hume_graph_free(struct HumeGraph *graph);

/**
 * Number of nodes, or 0 for a null handle.
 *
 * # Safety
 * `graph` must be null or a live handle.
 */
size_t hume_graph_node_count(const struct HumeGraph *graph);

/**
 * Number of tokens, or 0 for a null handle.
 *
 * # Safety
 * `graph` must be null or a live handle.
 */
size_t hume_graph_token_count(const struct HumeGraph *graph);

/**
 * Sorted token indices of a node's yield.
 *
 * # Safety
 * `graph` must be live, `node` NUL-terminated, `buf` valid for `capacity`
 * writes and `out_len` valid.
 */
enum HumeStatus hume_graph_yield(const struct HumeGraph *graph,
                                 const char *node,
                                 size_t *buf,
                                 size_t capacity,
                                 size_t *out_len);

/**
 * Score one annotation (JSON) against its graph.
 *
 * # Safety
 * `graph` must be live, `annotation_json` NUL-terminated and `out` valid.
 */
enum HumeStatus hume_score(const struct HumeGraph *graph,
                           const char *annotation_json,
                           double orange_weight,
                           struct HumeScoreResult *out);

/**
 * Parse a Pharaoh line such as `0-1 2-3` against the given lengths.
 *
 * # Safety
 * `line` must be NUL-terminated and `out` valid.
 */
enum HumeStatus hume_alignment_parse_pharaoh(const char *line,
                                             size_t source_len,
                                             size_t target_len,
                                             struct HumeAlignment **out);

/**
 * # Safety
 * `alignment` must come from [`hume_alignment_parse_pharaoh`] and not be
 * used afterwards.
 */
void hume_alignment_free(struct HumeAlignment *alignment);

/**
 * Target indices aligned to any of the given source indices.
 *
 * # Safety
 * `alignment` must be live, `unit_yield` valid for `yield_len` reads, `buf`
 * valid for `capacity` writes and `out_len` valid.
 */
enum HumeStatus hume_aligned_span(const struct HumeAlignment *alignment,
                                  const size_t *unit_yield,
                                  size_t yield_len,
                                  size_t *buf,
                                  size_t capacity,
                                  size_t *out_len);

/**
 * Cohen's kappa over the five-label space for two equally long strings of
 * label codes (`G`, `O`, `R`, `A`, `B`).
 *
 * # Safety
 * `labels_1` and `labels_2` must be valid for `n` reads and `out` valid.
 */
enum HumeStatus hume_cohens_kappa(const char *labels_1,
                                  const char *labels_2,
                                  size_t n,
                                  double *out);

/**
 * Pearson correlation of two arrays of length `n`.
 *
 * # Safety
 * `x` and `y` must be valid for `n` reads and `out` valid.
 */
enum HumeStatus hume_pearson(const double *x, const double *y, size_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HUME_H */
