//! Source/translation word alignments and the aligned text shown per unit.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ucca::{GraphError, TokenSet, UccaGraph};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlignmentError {
    #[error("malformed alignment: {0}")]
    Malformed(String),
    #[error("bad Pharaoh pair {0:?}, expected i-j")]
    Pharaoh(String),
    #[error("alignment pair #{pair} has an empty {side} side")]
    EmptySide { pair: usize, side: Side },
    #[error("{side} index {index} out of bounds for length {len}")]
    OutOfBounds { side: Side, index: usize, len: usize },
    #[error("translation {0:?} has no tokens")]
    EmptyTranslation(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Source,
    Target,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Source => "source",
            Side::Target => "target",
        })
    }
}

/// A machine translation of one source sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Translation {
    pub translation_id: String,
    pub sentence_id: String,
    pub system_id: String,
    pub tokens: Vec<String>,
}

impl Translation {
    pub fn validate(&self) -> Result<(), AlignmentError> {
        if self.tokens.is_empty() {
            return Err(AlignmentError::EmptyTranslation(self.translation_id.clone()));
        }
        Ok(())
    }

    pub fn text_of(&self, indices: &TokenSet) -> String {
        indices
            .iter()
            .filter_map(|&i| self.tokens.get(i).map(String::as_str))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AlignmentPair {
    pub src: TokenSet,
    pub tgt: TokenSet,
}

/// Many-to-many alignment, checked against sentence and translation lengths.
/// Pairs are kept exactly as given apart from de-duplication.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordAlignment {
    source_len: usize,
    target_len: usize,
    pairs: BTreeSet<AlignmentPair>,
}

impl WordAlignment {
    pub fn new(
        pairs: impl IntoIterator<Item = AlignmentPair>,
        source_len: usize,
        target_len: usize,
    ) -> Result<Self, AlignmentError> {
        let mut set = BTreeSet::new();
        for (i, pair) in pairs.into_iter().enumerate() {
            for (side, indices, len) in [
                (Side::Source, &pair.src, source_len),
                (Side::Target, &pair.tgt, target_len),
            ] {
                if indices.is_empty() {
                    return Err(AlignmentError::EmptySide { pair: i, side });
                }
                if let Some(&index) = indices.iter().find(|&&x| x >= len) {
                    return Err(AlignmentError::OutOfBounds { side, index, len });
                }
            }
            set.insert(pair);
        }
        Ok(Self {
            source_len,
            target_len,
            pairs: set,
        })
    }

    pub fn empty(source_len: usize, target_len: usize) -> Self {
        Self {
            source_len,
            target_len,
            pairs: BTreeSet::new(),
        }
    }

    /// Parse a Pharaoh line (`0-1 2-3 ...`, 0-based) into singleton pairs.
    pub fn from_pharaoh(
        line: &str,
        source_len: usize,
        target_len: usize,
    ) -> Result<Self, AlignmentError> {
        Self::new(parse_pharaoh(line)?, source_len, target_len)
    }

    pub fn source_len(&self) -> usize {
        self.source_len
    }

    pub fn target_len(&self) -> usize {
        self.target_len
    }

    pub fn pairs(&self) -> impl Iterator<Item = &AlignmentPair> {
        self.pairs.iter()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Union of the target sides of every pair whose source side meets `unit_yield`.
    pub fn aligned_span(&self, unit_yield: &TokenSet) -> Result<TokenSet, AlignmentError> {
        if let Some(&index) = unit_yield.iter().find(|&&i| i >= self.source_len) {
            return Err(AlignmentError::OutOfBounds {
                side: Side::Source,
                index,
                len: self.source_len,
            });
        }
        let mut out = TokenSet::new();
        for pair in &self.pairs {
            if !pair.src.is_disjoint(unit_yield) {
                out.extend(pair.tgt.iter().copied());
            }
        }
        Ok(out)
    }
}

pub fn parse_pharaoh(line: &str) -> Result<Vec<AlignmentPair>, AlignmentError> {
    line.split_whitespace()
        .map(|item| {
            let (s, t) = item
                .split_once('-')
                .ok_or_else(|| AlignmentError::Pharaoh(item.to_string()))?;
            let s: usize = s
                .parse()
                .map_err(|_| AlignmentError::Pharaoh(item.to_string()))?;
            let t: usize = t
                .parse()
                .map_err(|_| AlignmentError::Pharaoh(item.to_string()))?;
            Ok(AlignmentPair {
                src: TokenSet::from([s]),
                tgt: TokenSet::from([t]),
            })
        })
        .collect()
}

/// Alignment JSON record: `{sentence_id, translation_id, pairs:[{src,tgt}]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlignmentRecord {
    pub sentence_id: String,
    pub translation_id: String,
    pub pairs: Vec<AlignmentPair>,
}

impl AlignmentRecord {
    pub fn from_json(text: &str) -> Result<Self, AlignmentError> {
        serde_json::from_str(text).map_err(|e| AlignmentError::Malformed(e.to_string()))
    }

    pub fn resolve(
        &self,
        source_len: usize,
        target_len: usize,
    ) -> Result<WordAlignment, AlignmentError> {
        WordAlignment::new(self.pairs.iter().cloned(), source_len, target_len)
    }
}

/// Target indices strictly between the extremes of `aligned` that are not in it.
pub fn intervening_words(aligned: &TokenSet) -> TokenSet {
    match (aligned.first(), aligned.last()) {
        (Some(&lo), Some(&hi)) if hi > lo + 1 => {
            (lo + 1..hi).filter(|i| !aligned.contains(i)).collect()
        }
        _ => TokenSet::new(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AlignedView {
    pub node_id: String,
    pub aligned: TokenSet,
    pub intervening: TokenSet,
}

pub fn aligned_view(
    graph: &UccaGraph,
    alignment: &WordAlignment,
    translation: &Translation,
    node: &str,
) -> Result<AlignedView, AlignmentError> {
    if alignment.source_len() != graph.len() {
        return Err(AlignmentError::OutOfBounds {
            side: Side::Source,
            index: alignment.source_len(),
            len: graph.len(),
        });
    }
    if alignment.target_len() != translation.tokens.len() {
        return Err(AlignmentError::OutOfBounds {
            side: Side::Target,
            index: alignment.target_len(),
            len: translation.tokens.len(),
        });
    }
    let aligned = alignment.aligned_span(graph.yield_of(node)?)?;
    let intervening = intervening_words(&aligned);
    Ok(AlignedView {
        node_id: node.to_string(),
        aligned,
        intervening,
    })
}
