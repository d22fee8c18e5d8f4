//! Agreement, timing and correlation statistics over exported annotations.

mod agreement;
mod correlation;
mod da;
mod timing;

pub use agreement::{
    build_label_pairs, cohens_kappa, confusion_matrix, default_length_edges, kappa_breakdown,
    kappa_by_length, ConfusionMatrix, KappaBreakdown, LabelPair, LengthBin, Stratum,
};
pub use correlation::{
    correlation_by_unit_subset, hume_by_translation, hume_vs_da, SubsetCorrelation, UnitSubset,
};
pub use da::{
    pearson, read_da_csv, standardize_da, zscores, DaOptions, DaRecord, DaScore,
    DaStandardization, ExcludedRater,
};
pub use timing::{annotation_times, submission_logs, SubmissionLog, TimingSummary, DEFAULT_OUTLIER_SECONDS};

use thiserror::Error;

use crate::annotation::AnnotationError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("no label pairs to compare")]
    EmptyPairs,
    #[error("kappa is undefined: expected agreement is 1")]
    DegenerateKappa,
    #[error("length mismatch: {0} vs {1} values")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 values, got {0}")]
    TooFewValues(usize),
    #[error("zero variance")]
    ZeroVariance,
    #[error("bin edges must be strictly increasing")]
    BinEdges,
    #[error("submission times for {annotator} decrease at {sentence}")]
    UnorderedLog { annotator: String, sentence: String },
    #[error("raw DA rating {raw} for {translation} is outside 0..=100")]
    RatingOutOfRange { translation: String, raw: i64 },
    #[error("DA input: {0}")]
    DaInput(String),
    #[error("no sentence graph for {0:?}")]
    UnknownSentence(String),
    #[error("no translations left for subset {0}")]
    EmptySelection(String),
    #[error(transparent)]
    Annotation(#[from] AnnotationError),
}
