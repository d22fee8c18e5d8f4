use std::collections::BTreeMap;

use serde::Serialize;

use super::StatsError;
use crate::annotation::SentenceAnnotation;

/// Gaps longer than this are breaks, not annotation time.
pub const DEFAULT_OUTLIER_SECONDS: i64 = 500;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubmissionLog {
    pub annotator_id: String,
    /// `(sentence_id, submitted_at)` in submission order.
    pub entries: Vec<(String, i64)>,
}

/// One log per annotator, ordered by annotator id; entries sorted by time.
pub fn submission_logs(annotations: &[SentenceAnnotation]) -> Vec<SubmissionLog> {
    let mut by_annotator: BTreeMap<&str, Vec<(String, i64)>> = BTreeMap::new();
    for a in annotations {
        by_annotator
            .entry(a.annotator_id.as_str())
            .or_default()
            .push((a.sentence_id.clone(), a.submitted_at));
    }
    by_annotator
        .into_iter()
        .map(|(annotator, mut entries)| {
            entries.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
            SubmissionLog {
                annotator_id: annotator.to_string(),
                entries,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingSummary {
    pub annotator_id: String,
    pub submissions: usize,
    /// Kept gaps between successive submissions, in seconds.
    pub durations: Vec<i64>,
    pub discarded: usize,
    pub median: Option<f64>,
}

/// Successive submission gaps, dropping those above `outlier_threshold`, and
/// their median (mean of the middle two for an even count).
pub fn annotation_times(
    log: &SubmissionLog,
    outlier_threshold: i64,
) -> Result<TimingSummary, StatsError> {
    let mut durations = Vec::new();
    let mut discarded = 0;
    for w in log.entries.windows(2) {
        let gap = w[1].1 - w[0].1;
        if gap < 0 {
            return Err(StatsError::UnorderedLog {
                annotator: log.annotator_id.clone(),
                sentence: w[1].0.clone(),
            });
        }
        if gap > outlier_threshold {
            discarded += 1;
        } else {
            durations.push(gap);
        }
    }
    let mut sorted = durations.clone();
    sorted.sort_unstable();
    let median = match sorted.len() {
        0 => None,
        n if n % 2 == 1 => Some(sorted[n / 2] as f64),
        n => Some((sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0),
    };
    Ok(TimingSummary {
        annotator_id: log.annotator_id.clone(),
        submissions: log.entries.len(),
        durations,
        discarded,
        median,
    })
}
