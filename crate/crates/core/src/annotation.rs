//! HUME labels, per-sentence annotations and the composite score.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::ucca::UccaGraph;

/// Weight of an Orange unit in the composite score.
pub const DEFAULT_ORANGE_WEIGHT: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnnotationError {
    #[error("annotation references unknown node {0:?}")]
    UnknownNode(String),
    #[error("node {0:?} is annotated more than once")]
    DuplicateNode(String),
    #[error("no effective units: score is undefined")]
    UndefinedScore,
    #[error("cannot average an empty list of scores")]
    EmptyAverage,
    #[error("unknown label {0:?}, expected one of G, O, R, A, B")]
    UnknownLabel(String),
    #[error("line {line}: {message}")]
    Jsonl { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HumeLabel {
    Green,
    Orange,
    Red,
    Adequate,
    Bad,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelKind {
    Atomic,
    Structural,
}

impl HumeLabel {
    pub const ALL: [HumeLabel; 5] = [
        HumeLabel::Green,
        HumeLabel::Orange,
        HumeLabel::Red,
        HumeLabel::Adequate,
        HumeLabel::Bad,
    ];
    pub const ATOMIC: [HumeLabel; 3] = [HumeLabel::Green, HumeLabel::Orange, HumeLabel::Red];
    pub const STRUCTURAL: [HumeLabel; 2] = [HumeLabel::Adequate, HumeLabel::Bad];

    pub fn kind(self) -> LabelKind {
        match self {
            HumeLabel::Green | HumeLabel::Orange | HumeLabel::Red => LabelKind::Atomic,
            HumeLabel::Adequate | HumeLabel::Bad => LabelKind::Structural,
        }
    }

    pub fn code(self) -> char {
        match self {
            HumeLabel::Green => 'G',
            HumeLabel::Orange => 'O',
            HumeLabel::Red => 'R',
            HumeLabel::Adequate => 'A',
            HumeLabel::Bad => 'B',
        }
    }

    pub fn from_code(code: char) -> Option<Self> {
        Some(match code {
            'G' => HumeLabel::Green,
            'O' => HumeLabel::Orange,
            'R' => HumeLabel::Red,
            'A' => HumeLabel::Adequate,
            'B' => HumeLabel::Bad,
            _ => return None,
        })
    }

    /// Position in [`HumeLabel::ALL`].
    pub fn ordinal(self) -> usize {
        self as usize
    }
}

pub fn label_kind(label: HumeLabel) -> LabelKind {
    label.kind()
}

impl fmt::Display for HumeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

impl FromStr for HumeLabel {
    type Err = AnnotationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => HumeLabel::from_code(c),
            _ => None,
        }
        .ok_or_else(|| AnnotationError::UnknownLabel(s.to_string()))
    }
}

impl Serialize for HumeLabel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_char(self.code())
    }
}

impl<'de> Deserialize<'de> for HumeLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitAnnotation {
    pub node_id: String,
    pub label: HumeLabel,
}

/// Ordered label list that, unlike a map, keeps repeated node ids so that
/// validation can report them.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UnitLabels(Vec<UnitAnnotation>);

impl UnitLabels {
    pub fn new(mut units: Vec<UnitAnnotation>) -> Self {
        units.sort_by(|a, b| a.node_id.cmp(&b.node_id));
        Self(units)
    }

    pub fn iter(&self) -> impl Iterator<Item = &UnitAnnotation> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, node: &str) -> Option<HumeLabel> {
        self.0.iter().find(|u| u.node_id == node).map(|u| u.label)
    }
}

impl FromIterator<(String, HumeLabel)> for UnitLabels {
    fn from_iter<I: IntoIterator<Item = (String, HumeLabel)>>(iter: I) -> Self {
        Self::new(
            iter.into_iter()
                .map(|(node_id, label)| UnitAnnotation { node_id, label })
                .collect(),
        )
    }
}

impl Serialize for UnitLabels {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for u in &self.0 {
            map.serialize_entry(&u.node_id, &u.label)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for UnitLabels {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct LabelsVisitor;

        impl<'de> Visitor<'de> for LabelsVisitor {
            type Value = UnitLabels;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a map from node id to label")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Self::Value, A::Error> {
                let mut units = Vec::new();
                while let Some((node_id, label)) = access.next_entry::<String, HumeLabel>()? {
                    units.push(UnitAnnotation { node_id, label });
                }
                Ok(UnitLabels::new(units))
            }
        }

        d.deserialize_map(LabelsVisitor)
    }
}

/// One annotator's labels for one (sentence, translation) pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SentenceAnnotation {
    pub sentence_id: String,
    pub translation_id: String,
    pub annotator_id: String,
    /// UTC seconds since the Unix epoch.
    pub submitted_at: i64,
    pub labels: UnitLabels,
}

impl SentenceAnnotation {
    pub fn from_json(line: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(line)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("annotation serialization is infallible")
    }
}

pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<SentenceAnnotation>, AnnotationError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| AnnotationError::Jsonl {
            line: i + 1,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            SentenceAnnotation::from_json(&line).map_err(|e| AnnotationError::Jsonl {
                line: i + 1,
                message: e.to_string(),
            })?,
        );
    }
    Ok(out)
}

pub fn write_jsonl<W: Write>(mut w: W, annotations: &[SentenceAnnotation]) -> std::io::Result<()> {
    for a in annotations {
        writeln!(w, "{}", a.to_json())?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    UnknownNode { node_id: String },
    DuplicateNode { node_id: String },
    StructuralLabelOnTerminal { node_id: String, label: HumeLabel },
    SentenceMismatch { expected: String, found: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownNode { node_id } => write!(f, "unknown node {node_id:?}"),
            Violation::DuplicateNode { node_id } => {
                write!(f, "node {node_id:?} annotated more than once")
            }
            Violation::StructuralLabelOnTerminal { node_id, label } => {
                write!(f, "terminal {node_id:?} carries structural label {label}")
            }
            Violation::SentenceMismatch { expected, found } => {
                write!(f, "annotation is for sentence {found:?}, graph is {expected:?}")
            }
        }
    }
}

/// Check an annotation against its graph. An empty list means valid.
pub fn validate_annotation(graph: &UccaGraph, ann: &SentenceAnnotation) -> Vec<Violation> {
    let mut out = Vec::new();
    if ann.sentence_id != graph.sentence_id() {
        out.push(Violation::SentenceMismatch {
            expected: graph.sentence_id().to_string(),
            found: ann.sentence_id.clone(),
        });
    }
    let mut seen = BTreeSet::new();
    let mut reported = BTreeSet::new();
    for unit in ann.labels.iter() {
        if !seen.insert(unit.node_id.as_str()) {
            if reported.insert(unit.node_id.as_str()) {
                out.push(Violation::DuplicateNode {
                    node_id: unit.node_id.clone(),
                });
            }
            continue;
        }
        match graph.is_terminal(&unit.node_id) {
            Err(_) => out.push(Violation::UnknownNode {
                node_id: unit.node_id.clone(),
            }),
            Ok(true) if unit.label.kind() == LabelKind::Structural => {
                out.push(Violation::StructuralLabelOnTerminal {
                    node_id: unit.node_id.clone(),
                    label: unit.label,
                })
            }
            Ok(_) => {}
        }
    }
    out
}

fn label_map<'a>(
    graph: &UccaGraph,
    ann: &'a SentenceAnnotation,
) -> Result<BTreeMap<&'a str, HumeLabel>, AnnotationError> {
    let mut map = BTreeMap::new();
    for unit in ann.labels.iter() {
        if !graph.contains(&unit.node_id) {
            return Err(AnnotationError::UnknownNode(unit.node_id.clone()));
        }
        if map.insert(unit.node_id.as_str(), unit.label).is_some() {
            return Err(AnnotationError::DuplicateNode(unit.node_id.clone()));
        }
    }
    Ok(map)
}

/// Annotated nodes that count toward the score: everything labeled, minus the
/// strict descendants (over any edge) of internal nodes given an atomic label.
pub fn effective_units(
    graph: &UccaGraph,
    ann: &SentenceAnnotation,
) -> Result<BTreeMap<String, HumeLabel>, AnnotationError> {
    let labels = label_map(graph, ann)?;
    let mut excluded = BTreeSet::new();
    for (&node, &label) in &labels {
        let internal = !graph.is_terminal(node).expect("checked by label_map");
        if internal && label.kind() == LabelKind::Atomic {
            excluded.extend(graph.descendants(node).expect("checked by label_map"));
        }
    }
    Ok(labels
        .into_iter()
        .filter(|(node, _)| !excluded.contains(node))
        .map(|(node, label)| (node.to_string(), label))
        .collect())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub green: u64,
    pub orange: u64,
    pub red: u64,
    pub adequate: u64,
    pub bad: u64,
}

impl LabelCounts {
    pub fn add(&mut self, label: HumeLabel) {
        match label {
            HumeLabel::Green => self.green += 1,
            HumeLabel::Orange => self.orange += 1,
            HumeLabel::Red => self.red += 1,
            HumeLabel::Adequate => self.adequate += 1,
            HumeLabel::Bad => self.bad += 1,
        }
    }

    pub fn units(&self) -> u64 {
        self.green + self.orange + self.red + self.adequate + self.bad
    }
}

impl FromIterator<HumeLabel> for LabelCounts {
    fn from_iter<I: IntoIterator<Item = HumeLabel>>(iter: I) -> Self {
        let mut c = LabelCounts::default();
        for l in iter {
            c.add(l);
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HumeScore {
    pub value: f64,
    pub green: u64,
    pub orange: u64,
    pub red: u64,
    pub adequate: u64,
    pub bad: u64,
    pub units: u64,
}

impl HumeScore {
    /// `(Green + Adequate + w * Orange) / Units`.
    pub fn from_counts(counts: LabelCounts, orange_weight: f64) -> Result<Self, AnnotationError> {
        let units = counts.units();
        if units == 0 {
            return Err(AnnotationError::UndefinedScore);
        }
        let numerator =
            (counts.green + counts.adequate) as f64 + orange_weight * counts.orange as f64;
        Ok(Self {
            value: numerator / units as f64,
            green: counts.green,
            orange: counts.orange,
            red: counts.red,
            adequate: counts.adequate,
            bad: counts.bad,
            units,
        })
    }

    pub fn counts(&self) -> LabelCounts {
        LabelCounts {
            green: self.green,
            orange: self.orange,
            red: self.red,
            adequate: self.adequate,
            bad: self.bad,
        }
    }
}

pub fn hume_score(graph: &UccaGraph, ann: &SentenceAnnotation) -> Result<HumeScore, AnnotationError> {
    hume_score_weighted(graph, ann, DEFAULT_ORANGE_WEIGHT)
}

pub fn hume_score_weighted(
    graph: &UccaGraph,
    ann: &SentenceAnnotation,
    orange_weight: f64,
) -> Result<HumeScore, AnnotationError> {
    hume_score_where(graph, ann, orange_weight, |_, _| true)
}

/// Score restricted to the effective units accepted by `keep`.
pub fn hume_score_where<F>(
    graph: &UccaGraph,
    ann: &SentenceAnnotation,
    orange_weight: f64,
    mut keep: F,
) -> Result<HumeScore, AnnotationError>
where
    F: FnMut(&str, HumeLabel) -> bool,
{
    let counts = effective_units(graph, ann)?
        .into_iter()
        .filter(|(node, label)| keep(node, *label))
        .map(|(_, label)| label)
        .collect();
    HumeScore::from_counts(counts, orange_weight)
}

/// Mean of the score values of several annotations of one translation.
pub fn average_scores(scores: &[HumeScore]) -> Result<f64, AnnotationError> {
    if scores.is_empty() {
        return Err(AnnotationError::EmptyAverage);
    }
    Ok(scores.iter().map(|s| s.value).sum::<f64>() / scores.len() as f64)
}
