//! Small bundled examples: the "After graduation, Tom moved to America"
//! graph with a remote participant, a HUME annotation of it, and a
//! discontiguously aligned English-German pair.

use crate::alignment::{AlignmentRecord, Translation, WordAlignment};
use crate::annotation::SentenceAnnotation;
use crate::ucca::UccaGraph;

pub const GRADUATION_GRAPH: &str = include_str!("../fixtures/graduation.graph.json");
pub const GRADUATION_ANNOTATION: &str = include_str!("../fixtures/graduation.annotation.json");
pub const PREGNANCY_GRAPH: &str = include_str!("../fixtures/pregnancy.graph.json");
pub const PREGNANCY_TRANSLATION: &str = include_str!("../fixtures/pregnancy.translation.json");
pub const PREGNANCY_ALIGNMENT: &str = include_str!("../fixtures/pregnancy.alignment.json");

pub fn graduation_graph() -> UccaGraph {
    UccaGraph::from_json(GRADUATION_GRAPH).expect("bundled graph is valid")
}

pub fn graduation_annotation() -> SentenceAnnotation {
    SentenceAnnotation::from_json(GRADUATION_ANNOTATION).expect("bundled annotation is valid")
}

pub fn pregnancy() -> (UccaGraph, Translation, WordAlignment) {
    let graph = UccaGraph::from_json(PREGNANCY_GRAPH).expect("bundled graph is valid");
    let translation: Translation =
        serde_json::from_str(PREGNANCY_TRANSLATION).expect("bundled translation is valid");
    let alignment = AlignmentRecord::from_json(PREGNANCY_ALIGNMENT)
        .and_then(|r| r.resolve(graph.len(), translation.tokens.len()))
        .expect("bundled alignment is valid");
    (graph, translation, alignment)
}
