//! C interface to graph parsing, HUME scoring, alignment projection and the
//! agreement and correlation statistics.
//!
//! Every fallible call returns a [`HumeStatus`]; on failure a message is
//! available from [`hume_last_error`] on the same thread. Handles are opaque
//! and owned by the caller until passed to their `_free` function. Functions
//! that fill a caller buffer write the required length to `out_len` and
//! return `HUME_STATUS_BUFFER_TOO_SMALL` when `capacity` is short.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hume_core::alignment::WordAlignment;
use hume_core::analytics::{cohens_kappa, pearson, LabelPair, StatsError};
use hume_core::annotation::{hume_score_weighted, AnnotationError};
use hume_core::ucca::TokenSet;
use hume_core::{HumeLabel, SentenceAnnotation, UccaGraph};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HumeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidGraph = 4,
    InvalidAnnotation = 5,
    UndefinedScore = 6,
    UndefinedStatistic = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// A validated sentence graph.
pub struct HumeGraph(UccaGraph);

/// A word alignment with known source and target lengths.
pub struct HumeAlignment(WordAlignment);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HumeScoreResult {
    pub value: f64,
    pub green: u64,
    pub orange: u64,
    pub red: u64,
    pub adequate: u64,
    pub bad: u64,
    pub units: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).expect("nul bytes removed"));
}

type Result<T> = std::result::Result<T, (HumeStatus, String)>;

fn guard(f: impl FnOnce() -> Result<()>) -> HumeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            HumeStatus::Ok
        }
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            HumeStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str> {
    if p.is_null() {
        return Err((HumeStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| (HumeStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn non_null<'a, T>(p: *const T, what: &str) -> Result<&'a T> {
    p.as_ref()
        .ok_or_else(|| (HumeStatus::NullPointer, format!("{what} is null")))
}

unsafe fn fill(set: &TokenSet, buf: *mut usize, capacity: usize, out_len: *mut usize) -> Result<()> {
    if out_len.is_null() {
        return Err((HumeStatus::NullPointer, "out_len is null".into()));
    }
    *out_len = set.len();
    if set.len() > capacity {
        return Err((
            HumeStatus::BufferTooSmall,
            format!("need {} slots, have {capacity}", set.len()),
        ));
    }
    if !set.is_empty() {
        if buf.is_null() {
            return Err((HumeStatus::NullPointer, "buffer is null".into()));
        }
        for (i, v) in set.iter().enumerate() {
            *buf.add(i) = *v;
        }
    }
    Ok(())
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn hume_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hume_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Parse and validate a graph document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hume_graph_parse(json: *const c_char, out: *mut *mut HumeGraph) -> HumeStatus {
    guard(|| {
        if out.is_null() {
            return Err((HumeStatus::NullPointer, "out is null".into()));
        }
        *out = ptr::null_mut();
        let json = text(json, "json")?;
        let graph = UccaGraph::from_json(json).map_err(|e| (HumeStatus::InvalidGraph, e.to_string()))?;
        *out = Box::into_raw(Box::new(HumeGraph(graph)));
        Ok(())
    })
}

/// # Safety
/// `graph` must come from [`hume_graph_parse`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hume_graph_free(graph: *mut HumeGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Number of nodes, or 0 for a null handle.
///
/// # Safety
/// `graph` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hume_graph_node_count(graph: *const HumeGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.nodes().len())
}

/// Number of tokens, or 0 for a null handle.
///
/// # Safety
/// `graph` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hume_graph_token_count(graph: *const HumeGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.len())
}

/// Sorted token indices of a node's yield.
///
/// # Safety
/// `graph` must be live, `node` NUL-terminated, `buf` valid for `capacity`
/// writes and `out_len` valid.
#[no_mangle]
pub unsafe extern "C" fn hume_graph_yield(
    graph: *const HumeGraph,
    node: *const c_char,
    buf: *mut usize,
    capacity: usize,
    out_len: *mut usize,
) -> HumeStatus {
    guard(|| {
        let g = non_null(graph, "graph")?;
        let node = text(node, "node")?;
        let y = g.0.yield_of(node).map_err(|e| (HumeStatus::InvalidGraph, e.to_string()))?;
        fill(y, buf, capacity, out_len)
    })
}

/// Score one annotation (JSON) against its graph.
///
/// # Safety
/// `graph` must be live, `annotation_json` NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn hume_score(
    graph: *const HumeGraph,
    annotation_json: *const c_char,
    orange_weight: f64,
    out: *mut HumeScoreResult,
) -> HumeStatus {
    guard(|| {
        let g = non_null(graph, "graph")?;
        if out.is_null() {
            return Err((HumeStatus::NullPointer, "out is null".into()));
        }
        let ann = SentenceAnnotation::from_json(text(annotation_json, "annotation_json")?)
            .map_err(|e| (HumeStatus::Parse, e.to_string()))?;
        let s = hume_score_weighted(&g.0, &ann, orange_weight).map_err(|e| match e {
            AnnotationError::UndefinedScore => (HumeStatus::UndefinedScore, e.to_string()),
            other => (HumeStatus::InvalidAnnotation, other.to_string()),
        })?;
        *out = HumeScoreResult {
            value: s.value,
            green: s.green,
            orange: s.orange,
            red: s.red,
            adequate: s.adequate,
            bad: s.bad,
            units: s.units,
        };
        Ok(())
    })
}

/// Parse a Pharaoh line such as `0-1 2-3` against the given lengths.
///
/// # Safety
/// `line` must be NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn hume_alignment_parse_pharaoh(
    line: *const c_char,
    source_len: usize,
    target_len: usize,
    out: *mut *mut HumeAlignment,
) -> HumeStatus {
    guard(|| {
        if out.is_null() {
            return Err((HumeStatus::NullPointer, "out is null".into()));
        }
        *out = ptr::null_mut();
        let a = WordAlignment::from_pharaoh(text(line, "line")?, source_len, target_len)
            .map_err(|e| (HumeStatus::Parse, e.to_string()))?;
        *out = Box::into_raw(Box::new(HumeAlignment(a)));
        Ok(())
    })
}

/// # Safety
/// `alignment` must come from [`hume_alignment_parse_pharaoh`] and not be
/// used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hume_alignment_free(alignment: *mut HumeAlignment) {
    if !alignment.is_null() {
        drop(Box::from_raw(alignment));
    }
}

/// Target indices aligned to any of the given source indices.
///
/// # Safety
/// `alignment` must be live, `unit_yield` valid for `yield_len` reads, `buf`
/// valid for `capacity` writes and `out_len` valid.
#[no_mangle]
pub unsafe extern "C" fn hume_aligned_span(
    alignment: *const HumeAlignment,
    unit_yield: *const usize,
    yield_len: usize,
    buf: *mut usize,
    capacity: usize,
    out_len: *mut usize,
) -> HumeStatus {
    guard(|| {
        let a = non_null(alignment, "alignment")?;
        let unit: TokenSet = if yield_len == 0 {
            TokenSet::new()
        } else {
            non_null(unit_yield, "unit_yield")?;
            std::slice::from_raw_parts(unit_yield, yield_len).iter().copied().collect()
        };
        let span = a.0.aligned_span(&unit).map_err(|e| (HumeStatus::Parse, e.to_string()))?;
        fill(&span, buf, capacity, out_len)
    })
}

fn label(code: u8) -> Result<HumeLabel> {
    HumeLabel::from_code(code as char)
        .ok_or_else(|| (HumeStatus::Parse, format!("unknown label code {:?}", code as char)))
}

/// Cohen's kappa over the five-label space for two equally long strings of
/// label codes (`G`, `O`, `R`, `A`, `B`).
///
/// # Safety
/// `labels_1` and `labels_2` must be valid for `n` reads and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn hume_cohens_kappa(
    labels_1: *const c_char,
    labels_2: *const c_char,
    n: usize,
    out: *mut f64,
) -> HumeStatus {
    guard(|| {
        if out.is_null() || (n > 0 && (labels_1.is_null() || labels_2.is_null())) {
            return Err((HumeStatus::NullPointer, "null argument".into()));
        }
        let (a, b) = if n == 0 {
            (&[][..], &[][..])
        } else {
            (
                std::slice::from_raw_parts(labels_1 as *const u8, n),
                std::slice::from_raw_parts(labels_2 as *const u8, n),
            )
        };
        let pairs = a
            .iter()
            .zip(b)
            .enumerate()
            .map(|(i, (&x, &y))| {
                Ok(LabelPair {
                    sentence_id: String::new(),
                    translation_id: String::new(),
                    node_id: i.to_string(),
                    annotator_1: String::new(),
                    annotator_2: String::new(),
                    label_1: label(x)?,
                    label_2: label(y)?,
                    is_terminal: false,
                    categories: Vec::new(),
                    sentence_len: 0,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        *out = cohens_kappa(&pairs, &HumeLabel::ALL).map_err(stat_error)?;
        Ok(())
    })
}

fn stat_error(e: StatsError) -> (HumeStatus, String) {
    (HumeStatus::UndefinedStatistic, e.to_string())
}

/// Pearson correlation of two arrays of length `n`.
///
/// # Safety
/// `x` and `y` must be valid for `n` reads and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn hume_pearson(x: *const f64, y: *const f64, n: usize, out: *mut f64) -> HumeStatus {
    guard(|| {
        if out.is_null() || x.is_null() || y.is_null() {
            return Err((HumeStatus::NullPointer, "null argument".into()));
        }
        let (x, y) = (std::slice::from_raw_parts(x, n), std::slice::from_raw_parts(y, n));
        *out = pearson(x, y).map_err(stat_error)?;
        Ok(())
    })
}
