//! HUME: human semantic evaluation of machine translation over UCCA units.
//!
//! Translators' output is judged unit by unit against a UCCA graph of the
//! source sentence. Atomic units get Green/Orange/Red, structural units get
//! Adequate/Bad, and the labels aggregate into a composite score in `[0, 1]`.
//!
//! - [`ucca`]: graph parsing, validation, yields, multi-parent handling
//! - [`alignment`]: word alignments and per-unit aligned/intervening text
//! - [`annotation`]: labels, validation, effective units, the composite score
//! - [`analytics`]: agreement, timing, DA standardization, correlations
//! - [`store`] and [`service`]: persistent task queue and its HTTP API
//! - [`report`]: batch reports shared by the CLI and the service

pub mod alignment;
pub mod analytics;
pub mod annotation;
pub mod config;
pub mod corpus;
pub mod fixtures;
pub mod report;
pub mod service;
pub mod store;
pub mod ucca;

pub use alignment::{aligned_view, intervening_words, AlignedView, Translation, WordAlignment};
pub use annotation::{
    average_scores, effective_units, hume_score, validate_annotation, HumeLabel, HumeScore,
    LabelKind, SentenceAnnotation,
};
pub use ucca::{SemanticUnit, UccaCategory, UccaEdge, UccaGraph};
