//! In-memory corpus of source graphs, translations, alignments and DA
//! ratings, with the import rules shared by the CLI and the store.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::{parse_pharaoh, AlignmentRecord, Translation, WordAlignment};
use crate::analytics::DaRecord;
use crate::annotation::{self, SentenceAnnotation};
use crate::ucca::UccaGraph;

#[derive(Debug, Error)]
pub enum InputError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
}

impl InputError {
    fn parse(path: &Path, line: usize, message: impl ToString) -> Self {
        InputError::Parse {
            path: path.display().to_string(),
            line,
            message: message.to_string(),
        }
    }
}

pub fn read_file(path: &Path) -> Result<String, InputError> {
    fs::read_to_string(path).map_err(|source| InputError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Non-blank lines with their 1-based line numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l))
}

/// Graph documents, one JSON object per line (unvalidated).
pub fn read_graph_documents(path: &Path) -> Result<Vec<serde_json::Value>, InputError> {
    let text = read_file(path)?;
    lines(&text)
        .map(|(n, l)| serde_json::from_str(l).map_err(|e| InputError::parse(path, n, e)))
        .collect()
}

/// Parse and validate every graph; any invalid graph is an error.
pub fn read_graphs(path: &Path) -> Result<Vec<UccaGraph>, InputError> {
    let text = read_file(path)?;
    lines(&text)
        .map(|(n, l)| UccaGraph::from_json(l).map_err(|e| InputError::parse(path, n, e)))
        .collect()
}

pub fn read_translations(path: &Path) -> Result<Vec<Translation>, InputError> {
    let text = read_file(path)?;
    lines(&text)
        .map(|(n, l)| serde_json::from_str(l).map_err(|e| InputError::parse(path, n, e)))
        .collect()
}

/// Alignment records from either JSONL (`{sentence_id, translation_id,
/// pairs}` per line) or Pharaoh text. A Pharaoh file has one line per
/// translation, in the order of `translations`.
pub fn read_alignments(
    path: &Path,
    translations: &[Translation],
) -> Result<Vec<AlignmentRecord>, InputError> {
    let text = read_file(path)?;
    let looks_json = text.trim_start().starts_with('{');
    if looks_json {
        return lines(&text)
            .map(|(n, l)| AlignmentRecord::from_json(l).map_err(|e| InputError::parse(path, n, e)))
            .collect();
    }
    let raw: Vec<&str> = text.lines().collect();
    if raw.len() != translations.len() {
        return Err(InputError::parse(
            path,
            raw.len(),
            format!(
                "Pharaoh file has {} lines but there are {} translations",
                raw.len(),
                translations.len()
            ),
        ));
    }
    raw.iter()
        .zip(translations)
        .enumerate()
        .map(|(i, (line, t))| {
            Ok(AlignmentRecord {
                sentence_id: t.sentence_id.clone(),
                translation_id: t.translation_id.clone(),
                pairs: parse_pharaoh(line).map_err(|e| InputError::parse(path, i + 1, e))?,
            })
        })
        .collect()
}

pub fn read_annotations(path: &Path) -> Result<Vec<SentenceAnnotation>, InputError> {
    let file = fs::File::open(path).map_err(|source| InputError::Io {
        path: path.display().to_string(),
        source,
    })?;
    annotation::read_jsonl(io::BufReader::new(file)).map_err(|e| match e {
        annotation::AnnotationError::Jsonl { line, message } => {
            InputError::parse(path, line, message)
        }
        other => InputError::parse(path, 0, other),
    })
}

pub fn read_da(path: &Path) -> Result<Vec<DaRecord>, InputError> {
    let file = fs::File::open(path).map_err(|source| InputError::Io {
        path: path.display().to_string(),
        source,
    })?;
    crate::analytics::read_da_csv(file).map_err(|e| InputError::parse(path, 0, e))
}

/// A set of records to import. Graphs stay as raw documents so that an
/// invalid one can be rejected individually.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImportBatch {
    pub annotators: Vec<String>,
    pub graphs: Vec<serde_json::Value>,
    pub translations: Vec<Translation>,
    pub alignments: Vec<AlignmentRecord>,
    pub da: Vec<DaRecord>,
}

impl ImportBatch {
    pub fn is_empty(&self) -> bool {
        self.annotators.is_empty()
            && self.graphs.is_empty()
            && self.translations.is_empty()
            && self.alignments.is_empty()
            && self.da.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub kind: String,
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportReport {
    pub annotators: usize,
    pub graphs: usize,
    pub translations: usize,
    pub alignments: usize,
    pub da: usize,
    pub rejected: Vec<Rejection>,
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub annotators: Vec<String>,
    pub graphs: BTreeMap<String, UccaGraph>,
    /// Sentence ids in import order.
    pub sentence_order: Vec<String>,
    pub translations: BTreeMap<String, Translation>,
    /// Translation ids in import order; this is the task order.
    pub translation_order: Vec<String>,
    pub alignments: BTreeMap<String, WordAlignment>,
    pub alignment_records: BTreeMap<String, AlignmentRecord>,
    pub da: Vec<DaRecord>,
}

impl Corpus {
    /// Import a batch, first record wins on duplicate ids. Returns the report
    /// and the subset of the batch that was accepted.
    pub fn import(&mut self, batch: ImportBatch) -> (ImportReport, ImportBatch) {
        let mut report = ImportReport::default();
        let mut accepted = ImportBatch::default();
        let mut rejected = Vec::new();

        for a in batch.annotators {
            if a.is_empty() {
                rejected.push(report_reject("annotator", &a, "empty annotator id".into()));
            } else if self.annotators.contains(&a) {
                rejected.push(report_reject("annotator", &a, "duplicate annotator id".into()));
            } else {
                self.annotators.push(a.clone());
                accepted.annotators.push(a);
            }
        }

        for doc in batch.graphs {
            let id = doc
                .get("sentence_id")
                .and_then(|v| v.as_str())
                .unwrap_or("?")
                .to_string();
            match UccaGraph::from_value(doc.clone()) {
                Err(e) => rejected.push(report_reject("graph", &id, e.to_string())),
                Ok(g) if self.graphs.contains_key(g.sentence_id()) => {
                    rejected.push(report_reject("graph", &id, "duplicate sentence_id".into()))
                }
                Ok(g) => {
                    self.sentence_order.push(g.sentence_id().to_string());
                    accepted
                        .graphs
                        .push(serde_json::to_value(&g).expect("graph serializes"));
                    self.graphs.insert(g.sentence_id().to_string(), g);
                }
            }
        }

        for t in batch.translations {
            let id = t.translation_id.clone();
            if let Err(e) = t.validate() {
                rejected.push(report_reject("translation", &id, e.to_string()));
            } else if !self.graphs.contains_key(&t.sentence_id) {
                rejected.push(report_reject(
                    "translation",
                    &id,
                    format!("unknown sentence_id {:?}", t.sentence_id),
                ));
            } else if self.translations.contains_key(&id) {
                rejected.push(report_reject("translation", &id, "duplicate translation_id".into()));
            } else {
                self.translation_order.push(id.clone());
                self.translations.insert(id, t.clone());
                accepted.translations.push(t);
            }
        }

        for a in batch.alignments {
            let id = a.translation_id.clone();
            let Some(t) = self.translations.get(&id) else {
                rejected.push(report_reject("alignment", &id, format!("unknown translation_id {id:?}")));
                continue;
            };
            if t.sentence_id != a.sentence_id {
                rejected.push(report_reject(
                    "alignment",
                    &id,
                    format!(
                        "sentence_id {:?} does not match translation's {:?}",
                        a.sentence_id, t.sentence_id
                    ),
                ));
                continue;
            }
            let Some(g) = self.graphs.get(&a.sentence_id) else {
                rejected.push(report_reject("alignment", &id, "unknown sentence_id".into()));
                continue;
            };
            if self.alignments.contains_key(&id) {
                rejected.push(report_reject("alignment", &id, "duplicate alignment".into()));
                continue;
            }
            match a.resolve(g.len(), t.tokens.len()) {
                Err(e) => rejected.push(report_reject("alignment", &id, e.to_string())),
                Ok(w) => {
                    self.alignments.insert(id.clone(), w);
                    self.alignment_records.insert(id, a.clone());
                    accepted.alignments.push(a);
                }
            }
        }

        for r in batch.da {
            let id = r.translation_id.clone();
            if let Err(e) = r.validate() {
                rejected.push(report_reject("da", &id, e.to_string()));
            } else if !self.translations.contains_key(&id) {
                rejected.push(report_reject("da", &id, format!("unknown translation_id {id:?}")));
            } else {
                self.da.push(r.clone());
                accepted.da.push(r);
            }
        }

        report.annotators = accepted.annotators.len();
        report.graphs = accepted.graphs.len();
        report.translations = accepted.translations.len();
        report.alignments = accepted.alignments.len();
        report.da = accepted.da.len();
        report.rejected = rejected;
        (report, accepted)
    }

    pub fn alignment_for(&self, translation_id: &str) -> Option<&WordAlignment> {
        self.alignments.get(translation_id)
    }
}

fn report_reject(kind: &str, id: &str, reason: String) -> Rejection {
    Rejection {
        kind: kind.to_string(),
        id: id.to_string(),
        reason,
    }
}
