//! Project store: corpus, tasks and submitted annotations, persisted as an
//! append-only JSON-lines event log and rebuilt by replay on open.
//!
//! Writes are serialized through one writer lock and become visible by
//! swapping in a new immutable [`Snapshot`]; readers never block. A
//! submission is acknowledged only after its log record is synced.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use arc_swap::ArcSwap;
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::{intervening_words, Translation};
use crate::annotation::{validate_annotation, HumeLabel, SentenceAnnotation, UnitLabels, Violation};
use crate::corpus::{Corpus, ImportBatch, ImportReport};
use crate::report::{self, ReportError, ReportOptions};
use crate::ucca::{TokenSet, UccaCategory, UccaGraph};

const LOG_FILE: &str = "events.jsonl";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store I/O: {0}")]
    Io(#[from] io::Error),
    #[error("corrupt log record at line {line}: {message}")]
    Corrupt { line: usize, message: String },
    #[error("unknown annotator {0:?}")]
    UnknownAnnotator(String),
    #[error("unknown task {0:?}")]
    UnknownTask(String),
    #[error("task {task} belongs to another annotator")]
    NotOwner { task: String },
    #[error("task {0} was already submitted")]
    AlreadySubmitted(String),
    #[error("task {0} was skipped")]
    Skipped(String),
    #[error("submission carries no labels")]
    EmptySubmission,
    #[error("annotation rejected: {} violation(s)", .0.len())]
    Invalid(Vec<Violation>),
    #[error("nothing to export: {0}")]
    Empty(String),
    #[error("unknown export kind {0:?}")]
    UnknownExport(String),
    #[error(transparent)]
    Report(ReportError),
}

/// Source of submission timestamps (UTC seconds).
pub trait Clock: Send + Sync {
    fn now(&self) -> i64;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> i64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs() as i64)
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskState {
    Pending,
    Submitted,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub task_id: String,
    pub sentence_id: String,
    pub translation_id: String,
    pub annotator_id: String,
    pub state: TaskState,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Event {
    Import { batch: ImportBatch },
    Submit { task_id: String, annotation: SentenceAnnotation },
    Skip { task_id: String, annotator_id: String, at: i64 },
}

#[derive(Serialize, Deserialize)]
struct Record {
    seq: u64,
    event: Event,
}

#[derive(Debug, Clone)]
pub struct StoreOptions {
    pub data_dir: PathBuf,
    /// Fraction of translations shown to every annotator; the rest go to one
    /// annotator each, round robin.
    pub overlap: f64,
    /// Rewrite the log after this many appends; 0 disables compaction.
    pub compact_every: usize,
}

impl StoreOptions {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        Self {
            data_dir: data_dir.into(),
            overlap: 1.0,
            compact_every: 10_000,
        }
    }
}

/// Immutable view of the store at one point in its history.
#[derive(Debug, Clone, Default)]
pub struct Snapshot {
    pub corpus: Arc<Corpus>,
    /// Submitted annotations in submission order.
    pub annotations: Arc<Vec<SentenceAnnotation>>,
    states: Arc<BTreeMap<String, TaskState>>,
    overlap: f64,
    pub seq: u64,
}

impl Snapshot {
    fn task_id(position: usize, annotator_index: usize) -> String {
        format!("t{position:06}-a{annotator_index:03}")
    }

    fn is_assigned(&self, position: usize, annotator_index: usize) -> bool {
        let k = self.corpus.annotators.len();
        let f = self.overlap.clamp(0.0, 1.0);
        let shared = ((position + 1) as f64 * f).floor() > (position as f64 * f).floor();
        shared || position % k == annotator_index
    }

    fn state_of(&self, task_id: &str) -> TaskState {
        self.states.get(task_id).copied().unwrap_or(TaskState::Pending)
    }

    fn make_task(&self, position: usize, annotator_index: usize) -> Task {
        let translation_id = &self.corpus.translation_order[position];
        let t = &self.corpus.translations[translation_id];
        let task_id = Self::task_id(position, annotator_index);
        Task {
            state: self.state_of(&task_id),
            task_id,
            sentence_id: t.sentence_id.clone(),
            translation_id: translation_id.clone(),
            annotator_id: self.corpus.annotators[annotator_index].clone(),
        }
    }

    /// Every task of one annotator in corpus order.
    pub fn tasks_for(&self, annotator: &str) -> Result<Vec<Task>, StoreError> {
        let a = self
            .corpus
            .annotators
            .iter()
            .position(|x| x == annotator)
            .ok_or_else(|| StoreError::UnknownAnnotator(annotator.to_string()))?;
        Ok((0..self.corpus.translation_order.len())
            .filter(|&p| self.is_assigned(p, a))
            .map(|p| self.make_task(p, a))
            .collect())
    }

    pub fn task(&self, task_id: &str) -> Result<Task, StoreError> {
        let unknown = || StoreError::UnknownTask(task_id.to_string());
        let (p, a) = task_id
            .strip_prefix('t')
            .and_then(|rest| rest.split_once("-a"))
            .and_then(|(p, a)| Some((p.parse::<usize>().ok()?, a.parse::<usize>().ok()?)))
            .ok_or_else(unknown)?;
        if p >= self.corpus.translation_order.len()
            || a >= self.corpus.annotators.len()
            || Self::task_id(p, a) != task_id
            || !self.is_assigned(p, a)
        {
            return Err(unknown());
        }
        Ok(self.make_task(p, a))
    }

    pub fn next_task(&self, annotator: &str) -> Result<Option<TaskPayload>, StoreError> {
        let next = self
            .tasks_for(annotator)?
            .into_iter()
            .find(|t| t.state == TaskState::Pending);
        Ok(next.map(|t| self.payload(t)))
    }

    fn payload(&self, task: Task) -> TaskPayload {
        let graph = &self.corpus.graphs[&task.sentence_id];
        let translation = self.corpus.translations[&task.translation_id].clone();
        let alignment = self.corpus.alignment_for(&task.translation_id);
        let units = graph
            .semantic_units()
            .into_iter()
            .map(|u| {
                let aligned = alignment
                    .map(|a| a.aligned_span(&u.yield_).expect("yields are in bounds"))
                    .unwrap_or_default();
                let intervening = intervening_words(&aligned);
                let primary = graph.primary_instance(&u.node_id).ok();
                let parents = graph
                    .parent_edges(&u.node_id)
                    .expect("unit node exists")
                    .into_iter()
                    .map(|e| InstancePayload {
                        parent: e.parent.clone(),
                        category: e.category.clone(),
                        remote: e.remote,
                        annotatable: primary
                            .as_ref()
                            .is_some_and(|p| p.parent == e.parent),
                    })
                    .collect();
                UnitPayload {
                    text: graph.yield_text(&u.node_id).expect("unit node exists"),
                    allowed_labels: if u.is_terminal {
                        HumeLabel::ATOMIC.to_vec()
                    } else {
                        HumeLabel::ALL.to_vec()
                    },
                    aligned_text: translation.text_of(&aligned),
                    intervening_text: translation.text_of(&intervening),
                    node_id: u.node_id,
                    yield_: u.yield_,
                    is_terminal: u.is_terminal,
                    parents,
                    aligned,
                    intervening,
                }
            })
            .collect();
        TaskPayload {
            task,
            graph: graph.clone(),
            translation,
            units,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InstancePayload {
    pub parent: String,
    pub category: UccaCategory,
    pub remote: bool,
    /// Exactly one instance of a multi-parent node is annotatable.
    pub annotatable: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct UnitPayload {
    pub node_id: String,
    #[serde(rename = "yield")]
    pub yield_: TokenSet,
    pub text: String,
    pub is_terminal: bool,
    pub allowed_labels: Vec<HumeLabel>,
    pub parents: Vec<InstancePayload>,
    pub aligned: TokenSet,
    pub aligned_text: String,
    pub intervening: TokenSet,
    pub intervening_text: String,
}

/// Everything the annotation UI needs to render one task.
#[derive(Debug, Clone, Serialize)]
pub struct TaskPayload {
    pub task: Task,
    pub graph: UccaGraph,
    pub translation: Translation,
    pub units: Vec<UnitPayload>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ack {
    pub task_id: String,
    pub submitted_at: i64,
}

struct Writer {
    file: File,
    appended_since_compaction: usize,
}

pub struct ProjectStore {
    options: StoreOptions,
    snapshot: ArcSwap<Snapshot>,
    writer: Mutex<Writer>,
    clock: Arc<dyn Clock>,
}

impl ProjectStore {
    pub fn open(options: StoreOptions) -> Result<Self, StoreError> {
        Self::open_with_clock(options, Arc::new(SystemClock))
    }

    /// Open or create the store in `options.data_dir`, replaying its log.
    pub fn open_with_clock(
        options: StoreOptions,
        clock: Arc<dyn Clock>,
    ) -> Result<Self, StoreError> {
        fs::create_dir_all(&options.data_dir)?;
        let path = options.data_dir.join(LOG_FILE);
        let mut snapshot = Snapshot {
            overlap: options.overlap,
            ..Snapshot::default()
        };
        let mut corpus = Corpus::default();
        let mut annotations = Vec::new();
        let mut states = BTreeMap::new();

        if path.exists() {
            let (records, valid_len) = read_log(&path)?;
            for record in records {
                snapshot.seq = record.seq;
                match record.event {
                    Event::Import { batch } => {
                        corpus.import(batch);
                    }
                    Event::Submit { task_id, annotation } => {
                        states.insert(task_id, TaskState::Submitted);
                        annotations.push(annotation);
                    }
                    Event::Skip { task_id, .. } => {
                        states.insert(task_id, TaskState::Skipped);
                    }
                }
            }
            // Drop a torn final record left by a crash mid-append.
            let file = OpenOptions::new().write(true).open(&path)?;
            if file.metadata()?.len() != valid_len {
                log::warn!("truncating torn record at end of {}", path.display());
                file.set_len(valid_len)?;
                file.sync_all()?;
            }
        }
        snapshot.corpus = Arc::new(corpus);
        snapshot.annotations = Arc::new(annotations);
        snapshot.states = Arc::new(states);

        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Self {
            options,
            snapshot: ArcSwap::from_pointee(snapshot),
            writer: Mutex::new(Writer {
                file,
                appended_since_compaction: 0,
            }),
            clock,
        })
    }

    pub fn data_dir(&self) -> &Path {
        &self.options.data_dir
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.snapshot.load_full()
    }

    fn append(&self, writer: &mut Writer, seq: u64, event: Event) -> Result<(), StoreError> {
        let mut line = serde_json::to_string(&Record { seq, event })
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
        line.push('\n');
        writer.file.write_all(line.as_bytes())?;
        writer.file.sync_data()?;
        writer.appended_since_compaction += 1;
        Ok(())
    }

    fn after_append(&self, writer: &mut Writer) -> Result<(), StoreError> {
        let every = self.options.compact_every;
        if every > 0 && writer.appended_since_compaction >= every {
            self.compact_locked(writer)?;
        }
        Ok(())
    }

    pub fn import(&self, batch: ImportBatch) -> Result<ImportReport, StoreError> {
        let mut writer = self.writer.lock();
        let current = self.snapshot.load_full();
        let mut corpus = (*current.corpus).clone();
        let (report, accepted) = corpus.import(batch);
        if accepted.is_empty() {
            return Ok(report);
        }
        let seq = current.seq + 1;
        self.append(&mut writer, seq, Event::Import { batch: accepted })?;
        self.snapshot.store(Arc::new(Snapshot {
            corpus: Arc::new(corpus),
            seq,
            ..(*current).clone()
        }));
        self.after_append(&mut writer)?;
        Ok(report)
    }

    pub fn next_task(&self, annotator: &str) -> Result<Option<TaskPayload>, StoreError> {
        self.snapshot().next_task(annotator)
    }

    /// Store one annotator's labels for a task. Succeeds at most once per task.
    pub fn submit(
        &self,
        annotator: &str,
        task_id: &str,
        labels: UnitLabels,
    ) -> Result<Ack, StoreError> {
        let mut writer = self.writer.lock();
        let current = self.snapshot.load_full();
        let task = self.check_pending(&current, annotator, task_id)?;
        if labels.is_empty() {
            return Err(StoreError::EmptySubmission);
        }
        let mut annotation = SentenceAnnotation {
            sentence_id: task.sentence_id.clone(),
            translation_id: task.translation_id.clone(),
            annotator_id: annotator.to_string(),
            submitted_at: 0,
            labels,
        };
        let violations = validate_annotation(&current.corpus.graphs[&task.sentence_id], &annotation);
        if !violations.is_empty() {
            return Err(StoreError::Invalid(violations));
        }
        let submitted_at = self.clock.now();
        annotation.submitted_at = submitted_at;

        let seq = current.seq + 1;
        self.append(
            &mut writer,
            seq,
            Event::Submit {
                task_id: task_id.to_string(),
                annotation: annotation.clone(),
            },
        )?;
        let mut annotations = (*current.annotations).clone();
        annotations.push(annotation);
        let mut states = (*current.states).clone();
        states.insert(task_id.to_string(), TaskState::Submitted);
        self.snapshot.store(Arc::new(Snapshot {
            annotations: Arc::new(annotations),
            states: Arc::new(states),
            seq,
            ..(*current).clone()
        }));
        self.after_append(&mut writer)?;
        Ok(Ack {
            task_id: task_id.to_string(),
            submitted_at,
        })
    }

    /// Mark a pending task as skipped. Skipped tasks are never offered again
    /// and contribute no submission time.
    pub fn skip(&self, annotator: &str, task_id: &str) -> Result<Task, StoreError> {
        let mut writer = self.writer.lock();
        let current = self.snapshot.load_full();
        let mut task = self.check_pending(&current, annotator, task_id)?;
        let seq = current.seq + 1;
        self.append(
            &mut writer,
            seq,
            Event::Skip {
                task_id: task_id.to_string(),
                annotator_id: annotator.to_string(),
                at: self.clock.now(),
            },
        )?;
        let mut states = (*current.states).clone();
        states.insert(task_id.to_string(), TaskState::Skipped);
        self.snapshot.store(Arc::new(Snapshot {
            states: Arc::new(states),
            seq,
            ..(*current).clone()
        }));
        self.after_append(&mut writer)?;
        task.state = TaskState::Skipped;
        Ok(task)
    }

    fn check_pending(
        &self,
        snapshot: &Snapshot,
        annotator: &str,
        task_id: &str,
    ) -> Result<Task, StoreError> {
        if !snapshot.corpus.annotators.iter().any(|a| a == annotator) {
            return Err(StoreError::UnknownAnnotator(annotator.to_string()));
        }
        let task = snapshot.task(task_id)?;
        if task.annotator_id != annotator {
            return Err(StoreError::NotOwner {
                task: task_id.to_string(),
            });
        }
        match task.state {
            TaskState::Pending => Ok(task),
            TaskState::Submitted => Err(StoreError::AlreadySubmitted(task_id.to_string())),
            TaskState::Skipped => Err(StoreError::Skipped(task_id.to_string())),
        }
    }

    /// Render an export from the current snapshot.
    pub fn export(&self, kind: &str, options: &ReportOptions) -> Result<String, StoreError> {
        let snap = self.snapshot();
        report::export(
            kind,
            &snap.corpus.graphs,
            &snap.annotations,
            &snap.corpus.da,
            options,
        )
        .map_err(|e| match e {
            ReportError::Empty(m) => StoreError::Empty(m),
            ReportError::UnknownKind(k) => StoreError::UnknownExport(k),
            other => StoreError::Report(other),
        })
    }

    /// Rewrite the log as one import record followed by the task events.
    pub fn compact(&self) -> Result<(), StoreError> {
        let mut writer = self.writer.lock();
        self.compact_locked(&mut writer)
    }

    fn compact_locked(&self, writer: &mut Writer) -> Result<(), StoreError> {
        let snap = self.snapshot.load_full();
        let path = self.options.data_dir.join(LOG_FILE);
        let tmp = self.options.data_dir.join(format!("{LOG_FILE}.tmp"));

        let corpus = &snap.corpus;
        let batch = ImportBatch {
            annotators: corpus.annotators.clone(),
            graphs: corpus
                .sentence_order
                .iter()
                .map(|s| serde_json::to_value(&corpus.graphs[s]).expect("graph serializes"))
                .collect(),
            translations: corpus
                .translation_order
                .iter()
                .map(|t| corpus.translations[t].clone())
                .collect(),
            alignments: corpus
                .translation_order
                .iter()
                .filter_map(|t| corpus.alignment_records.get(t).cloned())
                .collect(),
            da: corpus.da.clone(),
        };
        let mut events = vec![Event::Import { batch }];
        let submitted: BTreeMap<(&str, &str), &str> = snap
            .states
            .iter()
            .filter(|(_, s)| **s == TaskState::Submitted)
            .map(|(id, _)| id.as_str())
            .filter_map(|id| {
                let t = snap.task(id).ok()?;
                let key = snap
                    .annotations
                    .iter()
                    .find(|a| a.translation_id == t.translation_id && a.annotator_id == t.annotator_id)?;
                Some(((key.translation_id.as_str(), key.annotator_id.as_str()), id))
            })
            .collect();
        for a in snap.annotations.iter() {
            if let Some(id) = submitted.get(&(a.translation_id.as_str(), a.annotator_id.as_str())) {
                events.push(Event::Submit {
                    task_id: id.to_string(),
                    annotation: a.clone(),
                });
            }
        }
        for (id, state) in snap.states.iter() {
            if *state == TaskState::Skipped {
                if let Ok(t) = snap.task(id) {
                    events.push(Event::Skip {
                        task_id: id.clone(),
                        annotator_id: t.annotator_id,
                        at: 0,
                    });
                }
            }
        }

        {
            let mut out = io::BufWriter::new(File::create(&tmp)?);
            let n = events.len() as u64;
            for (i, event) in events.into_iter().enumerate() {
                // Keep the final sequence number so later appends continue it.
                let seq = snap.seq + 1 + i as u64 - n;
                serde_json::to_writer(&mut out, &Record { seq, event })
                    .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
                out.write_all(b"\n")?;
            }
            out.flush()?;
            out.get_ref().sync_all()?;
        }
        fs::rename(&tmp, &path)?;
        if let Ok(dir) = File::open(&self.options.data_dir) {
            let _ = dir.sync_all();
        }
        writer.file = OpenOptions::new().append(true).open(&path)?;
        writer.appended_since_compaction = 0;
        Ok(())
    }
}

/// Parse every complete record; returns them with the byte length of the
/// valid prefix. Only the final line may be incomplete.
fn read_log(path: &Path) -> Result<(Vec<Record>, u64), StoreError> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    let mut valid_len = 0u64;
    let mut buf = String::new();
    let mut line_no = 0;
    loop {
        buf.clear();
        let n = reader.read_line(&mut buf)?;
        if n == 0 {
            break;
        }
        line_no += 1;
        let complete = buf.ends_with('\n');
        match serde_json::from_str::<Record>(buf.trim_end()) {
            Ok(r) if complete => {
                records.push(r);
                valid_len += n as u64;
            }
            Ok(_) | Err(_) if !complete => break,
            Err(e) => {
                // A bad line followed by more data is corruption, not a torn write.
                let mut rest = String::new();
                if reader.read_line(&mut rest)? == 0 {
                    break;
                }
                return Err(StoreError::Corrupt {
                    line: line_no,
                    message: e.to_string(),
                });
            }
            Ok(_) => unreachable!(),
        }
    }
    Ok((records, valid_len))
}
