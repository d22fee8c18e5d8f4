use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::{pearson, StatsError};
use crate::annotation::{
    average_scores, hume_score_weighted, hume_score_where, AnnotationError, HumeLabel, HumeScore,
    LabelKind, SentenceAnnotation,
};
use crate::ucca::{UccaCategory, UccaGraph};

/// Which units feed a restricted HUME score.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UnitSubset {
    All,
    Atomic,
    Structural,
    /// Units whose primary-instance edge carries one of these categories.
    Categories(Vec<UccaCategory>),
}

impl UnitSubset {
    /// all, atomic, struct, "P and S", H, A, C, E, L
    pub fn standard_panels() -> Vec<UnitSubset> {
        use UccaCategory::*;
        vec![
            UnitSubset::All,
            UnitSubset::Atomic,
            UnitSubset::Structural,
            UnitSubset::Categories(vec![Process, State]),
            UnitSubset::Categories(vec![ParallelScene]),
            UnitSubset::Categories(vec![Participant]),
            UnitSubset::Categories(vec![Centre]),
            UnitSubset::Categories(vec![Elaborator]),
            UnitSubset::Categories(vec![Linker]),
        ]
    }

    fn admits(&self, graph: &UccaGraph, node: &str, label: HumeLabel) -> bool {
        match self {
            UnitSubset::All => true,
            UnitSubset::Atomic => label.kind() == LabelKind::Atomic,
            UnitSubset::Structural => label.kind() == LabelKind::Structural,
            UnitSubset::Categories(cats) => graph
                .primary_category(node)
                .ok()
                .flatten()
                .is_some_and(|c| cats.contains(&c)),
        }
    }
}

impl fmt::Display for UnitSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnitSubset::All => f.write_str("all"),
            UnitSubset::Atomic => f.write_str("atomic"),
            UnitSubset::Structural => f.write_str("struct"),
            UnitSubset::Categories(cats) => {
                let codes: Vec<&str> = cats.iter().map(UccaCategory::code).collect();
                f.write_str(&codes.join(" and "))
            }
        }
    }
}

impl FromStr for UnitSubset {
    type Err = String;

    /// Accepts `all`, `atomic`, `struct`/`structural`, or category codes
    /// joined by `+`, `,` or ` and ` (e.g. `P+S`, `P and S`, `C`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "all" => return Ok(UnitSubset::All),
            "atomic" => return Ok(UnitSubset::Atomic),
            "struct" | "structural" => return Ok(UnitSubset::Structural),
            _ => {}
        }
        let cats: Vec<UccaCategory> = s
            .replace(" and ", "+")
            .split(['+', ','])
            .map(str::trim)
            .filter(|c| !c.is_empty())
            .map(UccaCategory::from_code)
            .collect();
        if cats.is_empty() {
            return Err(format!("empty unit subset {s:?}"));
        }
        Ok(UnitSubset::Categories(cats))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetCorrelation {
    pub subset: String,
    pub pearson: f64,
    /// Translations that entered the correlation.
    pub translations: usize,
    /// Effective units admitted by the subset, summed over annotations.
    pub units: u64,
    pub excluded_no_units: usize,
    pub excluded_no_da: usize,
}

type ScoreFn<'a> = dyn Fn(&UccaGraph, &SentenceAnnotation) -> Result<HumeScore, AnnotationError> + 'a;

struct Collected {
    hume: Vec<f64>,
    da: Vec<f64>,
    units: u64,
    excluded_no_units: usize,
    excluded_no_da: usize,
}

fn collect(
    annotations: &[SentenceAnnotation],
    graphs: &BTreeMap<String, UccaGraph>,
    da_scores: &BTreeMap<String, f64>,
    score: &ScoreFn<'_>,
) -> Result<Collected, StatsError> {
    let mut by_translation: BTreeMap<&str, Vec<&SentenceAnnotation>> = BTreeMap::new();
    for a in annotations {
        by_translation.entry(a.translation_id.as_str()).or_default().push(a);
    }
    let mut out = Collected {
        hume: Vec::new(),
        da: Vec::new(),
        units: 0,
        excluded_no_units: 0,
        excluded_no_da: 0,
    };
    for (translation, anns) in by_translation {
        let mut scores = Vec::new();
        for a in anns {
            let graph = graphs
                .get(&a.sentence_id)
                .ok_or_else(|| StatsError::UnknownSentence(a.sentence_id.clone()))?;
            match score(graph, a) {
                Ok(s) => scores.push(s),
                Err(AnnotationError::UndefinedScore) => {}
                Err(e) => return Err(e.into()),
            }
        }
        if scores.is_empty() {
            out.excluded_no_units += 1;
            continue;
        }
        let Some(&da) = da_scores.get(translation) else {
            out.excluded_no_da += 1;
            continue;
        };
        out.units += scores.iter().map(|s| s.units).sum::<u64>();
        out.hume.push(average_scores(&scores)?);
        out.da.push(da);
    }
    Ok(out)
}

/// Averaged HUME score per translation id (annotations with no effective
/// units are skipped).
pub fn hume_by_translation(
    annotations: &[SentenceAnnotation],
    graphs: &BTreeMap<String, UccaGraph>,
    orange_weight: f64,
) -> Result<BTreeMap<String, f64>, StatsError> {
    let mut by_translation: BTreeMap<&str, Vec<HumeScore>> = BTreeMap::new();
    for a in annotations {
        let graph = graphs
            .get(&a.sentence_id)
            .ok_or_else(|| StatsError::UnknownSentence(a.sentence_id.clone()))?;
        match hume_score_weighted(graph, a, orange_weight) {
            Ok(s) => by_translation.entry(a.translation_id.as_str()).or_default().push(s),
            Err(AnnotationError::UndefinedScore) => {}
            Err(e) => return Err(e.into()),
        }
    }
    by_translation
        .into_iter()
        .map(|(t, s)| Ok((t.to_string(), average_scores(&s)?)))
        .collect()
}

/// Pearson correlation between per-translation averaged HUME and DA.
pub fn hume_vs_da(
    annotations: &[SentenceAnnotation],
    graphs: &BTreeMap<String, UccaGraph>,
    da_scores: &BTreeMap<String, f64>,
    orange_weight: f64,
) -> Result<SubsetCorrelation, StatsError> {
    let score = move |g: &UccaGraph, a: &SentenceAnnotation| hume_score_weighted(g, a, orange_weight);
    finish(
        "all".to_string(),
        collect(annotations, graphs, da_scores, &score)?,
    )
}

/// Correlation of DA with a HUME score computed over a subset of units.
pub fn correlation_by_unit_subset(
    annotations: &[SentenceAnnotation],
    graphs: &BTreeMap<String, UccaGraph>,
    da_scores: &BTreeMap<String, f64>,
    subset: &UnitSubset,
    orange_weight: f64,
) -> Result<SubsetCorrelation, StatsError> {
    let score = |g: &UccaGraph, a: &SentenceAnnotation| {
        hume_score_where(g, a, orange_weight, |node, label| subset.admits(g, node, label))
    };
    finish(
        subset.to_string(),
        collect(annotations, graphs, da_scores, &score)?,
    )
}

fn finish(subset: String, c: Collected) -> Result<SubsetCorrelation, StatsError> {
    if c.hume.is_empty() {
        return Err(StatsError::EmptySelection(subset));
    }
    Ok(SubsetCorrelation {
        pearson: pearson(&c.hume, &c.da)?,
        subset,
        translations: c.hume.len(),
        units: c.units,
        excluded_no_units: c.excluded_no_units,
        excluded_no_da: c.excluded_no_da,
    })
}
