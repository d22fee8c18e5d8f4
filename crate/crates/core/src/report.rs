//! Report builders shared by the command line and the export endpoints, with
//! JSON and plain-text renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::analytics::{
    annotation_times, build_label_pairs, confusion_matrix, correlation_by_unit_subset,
    default_length_edges, hume_vs_da, kappa_breakdown, kappa_by_length, standardize_da,
    submission_logs, ConfusionMatrix, DaOptions, DaRecord, DaStandardization, KappaBreakdown,
    LengthBin, StatsError, Stratum, SubsetCorrelation, TimingSummary, UnitSubset,
    DEFAULT_OUTLIER_SECONDS,
};
use crate::annotation::{
    average_scores, hume_score_weighted, write_jsonl, AnnotationError, HumeLabel, HumeScore,
    SentenceAnnotation, DEFAULT_ORANGE_WEIGHT,
};
use crate::ucca::UccaGraph;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Annotation(#[from] AnnotationError),
    #[error("no sentence graph for {0:?}")]
    UnknownSentence(String),
    #[error("nothing to report: {0}")]
    Empty(String),
    #[error("unknown export kind {0:?}")]
    UnknownKind(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOptions {
    pub orange_weight: f64,
    pub outlier_seconds: i64,
    /// Sentence-length bin edges; derived from the data when unset.
    pub length_edges: Option<Vec<usize>>,
    pub da: DaOptions,
    /// Subsets to correlate; the standard panels when empty.
    pub subsets: Vec<UnitSubset>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            orange_weight: DEFAULT_ORANGE_WEIGHT,
            outlier_seconds: DEFAULT_OUTLIER_SECONDS,
            length_edges: None,
            da: DaOptions::default(),
            subsets: Vec::new(),
        }
    }
}

/// Keep the first submission of each (translation, annotator), ordered by
/// translation then annotator.
fn first_submissions(annotations: &[SentenceAnnotation]) -> Vec<&SentenceAnnotation> {
    let mut seen: BTreeMap<(&str, &str), &SentenceAnnotation> = BTreeMap::new();
    for a in annotations {
        seen.entry((a.translation_id.as_str(), a.annotator_id.as_str()))
            .or_insert(a);
    }
    seen.into_values().collect()
}

fn require_annotations(annotations: &[SentenceAnnotation]) -> Result<(), ReportError> {
    if annotations.is_empty() {
        return Err(ReportError::Empty("no annotations".into()));
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map(|x| format!("{x:.digits$}"))
        .unwrap_or_else(|| "undefined".into())
}

/// Left-aligned first column, right-aligned rest.
fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &[String]| {
        let mut text = String::new();
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if i == 0 {
                let _ = write!(text, "{cell:<w$}");
            } else {
                let _ = write!(text, "  {cell:>w$}");
            }
        }
        out.push_str(text.trim_end());
        out.push('\n');
    };
    line(&header.iter().map(|s| s.to_string()).collect::<Vec<_>>());
    for row in rows {
        line(row);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnotatorScore {
    pub annotator_id: String,
    /// `None` when the annotation has no effective units.
    pub score: Option<HumeScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TranslationScores {
    pub translation_id: String,
    pub sentence_id: String,
    pub annotations: Vec<AnnotatorScore>,
    pub mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoresReport {
    pub orange_weight: f64,
    pub non_standard_weight: bool,
    pub translations: Vec<TranslationScores>,
    /// Mean of the per-translation means.
    pub corpus_mean: Option<f64>,
}

pub fn scores_report(
    graphs: &BTreeMap<String, UccaGraph>,
    annotations: &[SentenceAnnotation],
    orange_weight: f64,
) -> Result<ScoresReport, ReportError> {
    require_annotations(annotations)?;
    let mut translations: Vec<TranslationScores> = Vec::new();
    for a in first_submissions(annotations) {
        let graph = graphs
            .get(&a.sentence_id)
            .ok_or_else(|| ReportError::UnknownSentence(a.sentence_id.clone()))?;
        let score = match hume_score_weighted(graph, a, orange_weight) {
            Ok(s) => Some(s),
            Err(AnnotationError::UndefinedScore) => None,
            Err(e) => return Err(e.into()),
        };
        if translations.last().map(|t| t.translation_id.as_str()) != Some(&a.translation_id) {
            translations.push(TranslationScores {
                translation_id: a.translation_id.clone(),
                sentence_id: a.sentence_id.clone(),
                annotations: Vec::new(),
                mean: None,
            });
        }
        translations
            .last_mut()
            .expect("just pushed")
            .annotations
            .push(AnnotatorScore {
                annotator_id: a.annotator_id.clone(),
                score,
            });
    }
    let mut means = Vec::new();
    for t in &mut translations {
        let defined: Vec<HumeScore> = t.annotations.iter().filter_map(|a| a.score).collect();
        t.mean = average_scores(&defined).ok();
        means.extend(t.mean);
    }
    Ok(ScoresReport {
        orange_weight,
        non_standard_weight: orange_weight != DEFAULT_ORANGE_WEIGHT,
        corpus_mean: (!means.is_empty()).then(|| means.iter().sum::<f64>() / means.len() as f64),
        translations,
    })
}

impl ScoresReport {
    pub fn to_text(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .translations
            .iter()
            .flat_map(|t| {
                t.annotations.iter().map(move |a| {
                    let counts = a
                        .score
                        .map(|s| {
                            vec![
                                s.green.to_string(),
                                s.orange.to_string(),
                                s.red.to_string(),
                                s.adequate.to_string(),
                                s.bad.to_string(),
                                s.units.to_string(),
                            ]
                        })
                        .unwrap_or_else(|| vec!["-".into(); 6]);
                    let mut row = vec![t.translation_id.clone(), a.annotator_id.clone()];
                    row.extend(counts);
                    row.push(fmt_opt(a.score.map(|s| s.value), 4));
                    row
                })
            })
            .collect();
        let mut out = table(
            &["translation", "annotator", "G", "O", "R", "A", "B", "units", "hume"],
            &rows,
        );
        let _ = writeln!(out, "\ncorpus mean: {}", fmt_opt(self.corpus_mean, 4));
        if self.non_standard_weight {
            let _ = writeln!(out, "note: non-standard orange weight {}", self.orange_weight);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IaaReport {
    pub pairs: usize,
    pub notice: Option<String>,
    pub breakdown: Option<KappaBreakdown>,
    pub confusion: ConfusionMatrix,
    pub length_edges: Vec<usize>,
    pub length_bins: Vec<LengthBin>,
}

pub fn iaa_report(
    graphs: &BTreeMap<String, UccaGraph>,
    annotations: &[SentenceAnnotation],
    length_edges: Option<&[usize]>,
) -> Result<IaaReport, ReportError> {
    require_annotations(annotations)?;
    let pairs = build_label_pairs(graphs, annotations)?;
    let edges = match length_edges {
        Some(e) => e.to_vec(),
        None => default_length_edges(pairs.iter().map(|p| p.sentence_len).max().unwrap_or(0)),
    };
    let length_bins = kappa_by_length(&pairs, &edges)?;
    let (breakdown, notice) = match kappa_breakdown(&pairs) {
        Ok(b) => (Some(b), None),
        Err(StatsError::EmptyPairs) => (
            None,
            Some("no translation was labeled by two annotators; agreement is undefined".into()),
        ),
        Err(e) => return Err(e.into()),
    };
    Ok(IaaReport {
        pairs: pairs.len(),
        notice,
        breakdown,
        confusion: confusion_matrix(&pairs),
        length_edges: edges,
        length_bins,
    })
}

impl IaaReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(n) = &self.notice {
            let _ = writeln!(out, "notice: {n}");
        }
        let stratum = |name: &str, s: Option<&Stratum>| {
            vec![
                name.to_string(),
                s.map(|s| s.pairs).unwrap_or(0).to_string(),
                fmt_opt(s.and_then(|s| s.kappa), 3),
            ]
        };
        if let Some(b) = &self.breakdown {
            let rows = vec![
                stratum("all", Some(&b.all)),
                stratum("atomic", b.atomic.as_ref()),
                stratum("structural", b.structural.as_ref()),
            ];
            out.push_str(&table(&["units", "pairs", "kappa"], &rows));
            let _ = writeln!(out, "cross-kind pairs: {}", b.cross_kind);
        }
        out.push_str("\nconfusion (rows: first annotator)\n");
        let rows: Vec<Vec<String>> = HumeLabel::ALL
            .iter()
            .map(|l| {
                let mut row = vec![l.code().to_string()];
                row.extend(HumeLabel::ALL.iter().map(|m| self.confusion.get(*l, *m).to_string()));
                row
            })
            .collect();
        out.push_str(&table(&["", "G", "O", "R", "A", "B"], &rows));
        out.push_str("\nby sentence length\n");
        let rows: Vec<Vec<String>> = self
            .length_bins
            .iter()
            .map(|b| {
                let range = match (b.lower, b.upper) {
                    (None, Some(u)) => format!("<{u}"),
                    (Some(l), Some(u)) => format!("{l}-{}", u - 1),
                    (Some(l), None) => format!(">={l}"),
                    (None, None) => "all".into(),
                };
                vec![
                    range,
                    b.all.pairs.to_string(),
                    fmt_opt(b.all.kappa, 3),
                    fmt_opt(b.atomic.kappa, 3),
                    fmt_opt(b.structural.kappa, 3),
                ]
            })
            .collect();
        out.push_str(&table(&["length", "pairs", "all", "atomic", "structural"], &rows));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimesReport {
    pub outlier_seconds: i64,
    pub annotators: Vec<TimingSummary>,
}

pub fn times_report(
    annotations: &[SentenceAnnotation],
    outlier_seconds: i64,
) -> Result<TimesReport, ReportError> {
    require_annotations(annotations)?;
    let annotators = submission_logs(annotations)
        .iter()
        .map(|log| annotation_times(log, outlier_seconds))
        .collect::<Result<_, _>>()?;
    Ok(TimesReport {
        outlier_seconds,
        annotators,
    })
}

impl TimesReport {
    pub fn to_text(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .annotators
            .iter()
            .map(|s| {
                vec![
                    s.annotator_id.clone(),
                    s.submissions.to_string(),
                    s.durations.len().to_string(),
                    s.discarded.to_string(),
                    fmt_opt(s.median, 1),
                ]
            })
            .collect();
        let mut out = table(&["annotator", "submissions", "gaps", "discarded", "median_s"], &rows);
        let _ = writeln!(out, "\ngaps above {} s discarded", self.outlier_seconds);
        out
    }
}

pub fn da_report(records: &[DaRecord], options: &DaOptions) -> Result<DaStandardization, ReportError> {
    if records.is_empty() {
        return Err(ReportError::Empty("no DA ratings".into()));
    }
    Ok(standardize_da(records, options)?)
}

pub fn da_text(report: &DaStandardization) -> String {
    let rows: Vec<Vec<String>> = report
        .scores
        .iter()
        .map(|(t, s)| vec![t.clone(), s.raters.to_string(), format!("{:.4}", s.score)])
        .collect();
    let mut out = table(&["translation", "raters", "da_z"], &rows);
    for e in &report.excluded_raters {
        let _ = writeln!(out, "excluded rater {}: {}", e.crowd_annotator_id, e.reason);
    }
    for (t, n) in &report.dropped_translations {
        let _ = writeln!(out, "dropped {t}: {n} rater(s)");
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetOutcome {
    pub subset: String,
    pub result: Option<SubsetCorrelation>,
    pub error: Option<String>,
}

impl SubsetOutcome {
    fn from(subset: String, r: Result<SubsetCorrelation, StatsError>) -> Result<Self, ReportError> {
        match r {
            Ok(c) => Ok(Self {
                subset,
                result: Some(c),
                error: None,
            }),
            Err(e @ (StatsError::EmptySelection(_) | StatsError::TooFewValues(_) | StatsError::ZeroVariance)) => {
                Ok(Self {
                    subset,
                    result: None,
                    error: Some(e.to_string()),
                })
            }
            Err(e) => Err(e.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub orange_weight: f64,
    pub non_standard_weight: bool,
    pub required_raters: Option<usize>,
    pub overall: SubsetOutcome,
    pub subsets: Vec<SubsetOutcome>,
}

pub fn correlation_report(
    graphs: &BTreeMap<String, UccaGraph>,
    annotations: &[SentenceAnnotation],
    da: &[DaRecord],
    options: &ReportOptions,
) -> Result<CorrelationReport, ReportError> {
    require_annotations(annotations)?;
    let da_scores = da_report(da, &options.da)?.score_map();
    let w = options.orange_weight;
    let overall = SubsetOutcome::from("all".into(), hume_vs_da(annotations, graphs, &da_scores, w))?;
    let panels = if options.subsets.is_empty() {
        UnitSubset::standard_panels()
    } else {
        options.subsets.clone()
    };
    let subsets = panels
        .iter()
        .map(|s| {
            SubsetOutcome::from(
                s.to_string(),
                correlation_by_unit_subset(annotations, graphs, &da_scores, s, w),
            )
        })
        .collect::<Result<_, _>>()?;
    Ok(CorrelationReport {
        orange_weight: w,
        non_standard_weight: w != DEFAULT_ORANGE_WEIGHT,
        required_raters: options.da.required_raters,
        overall,
        subsets,
    })
}

impl CorrelationReport {
    pub fn to_text(&self) -> String {
        let row = |o: &SubsetOutcome| match &o.result {
            Some(c) => vec![
                o.subset.clone(),
                format!("{:.3}", c.pearson),
                c.translations.to_string(),
                c.units.to_string(),
                c.excluded_no_units.to_string(),
                c.excluded_no_da.to_string(),
            ],
            None => vec![
                o.subset.clone(),
                "undefined".into(),
                "0".into(),
                "0".into(),
                "-".into(),
                "-".into(),
            ],
        };
        let mut rows = vec![row(&self.overall)];
        rows.extend(self.subsets.iter().map(row));
        let mut out = table(
            &["subset", "pearson", "translations", "units", "no_units", "no_da"],
            &rows,
        );
        for o in std::iter::once(&self.overall).chain(&self.subsets) {
            if let Some(e) = &o.error {
                let _ = writeln!(out, "{}: {e}", o.subset);
            }
        }
        if self.non_standard_weight {
            let _ = writeln!(out, "note: non-standard orange weight {}", self.orange_weight);
        }
        out
    }
}

pub const EXPORT_KINDS: [&str; 6] = ["annotations", "scores", "iaa", "times", "da", "correlations"];

/// Render one export. `annotations` is JSON lines, the rest pretty JSON.
pub fn export(
    kind: &str,
    graphs: &BTreeMap<String, UccaGraph>,
    annotations: &[SentenceAnnotation],
    da: &[DaRecord],
    options: &ReportOptions,
) -> Result<String, ReportError> {
    fn json<T: Serialize>(v: &T) -> String {
        let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
        s.push('\n');
        s
    }
    match kind {
        "annotations" => {
            require_annotations(annotations)?;
            let mut buf = Vec::new();
            write_jsonl(&mut buf, annotations).expect("writing to memory");
            Ok(String::from_utf8(buf).expect("JSON is UTF-8"))
        }
        "scores" => Ok(json(&scores_report(graphs, annotations, options.orange_weight)?)),
        "iaa" => Ok(json(&iaa_report(graphs, annotations, options.length_edges.as_deref())?)),
        "times" => Ok(json(&times_report(annotations, options.outlier_seconds)?)),
        "da" => Ok(json(&da_report(da, &options.da)?)),
        "correlations" => Ok(json(&correlation_report(graphs, annotations, da, options)?)),
        other => Err(ReportError::UnknownKind(other.to_string())),
    }
}
