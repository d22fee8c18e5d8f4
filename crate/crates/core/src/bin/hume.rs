use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use hume_core::analytics::{DaOptions, UnitSubset, DEFAULT_OUTLIER_SECONDS};
use hume_core::annotation::{validate_annotation, SentenceAnnotation, DEFAULT_ORANGE_WEIGHT};
use hume_core::config::Config;
use hume_core::corpus::{self, ImportBatch, InputError};
use hume_core::report::{self, ReportError, ReportOptions};
use hume_core::store::{ProjectStore, StoreError};
use hume_core::UccaGraph;

#[derive(Parser)]
#[command(name = "hume", version, about = "Semantic unit-level MT evaluation")]
struct Cli {
    /// Print results as JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Print errors as a JSON object on stderr.
    #[arg(long, global = true)]
    error_json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Inputs {
    /// Sentence graphs, one JSON object per line.
    #[arg(long)]
    graphs: PathBuf,
    /// Annotations, one JSON object per line.
    #[arg(long)]
    annotations: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Check graphs, translations, alignments and annotations.
    Validate {
        #[arg(long)]
        graphs: PathBuf,
        #[arg(long)]
        translations: Option<PathBuf>,
        /// JSON lines or Pharaoh text (one line per translation).
        #[arg(long, requires = "translations")]
        alignments: Option<PathBuf>,
        #[arg(long)]
        annotations: Option<PathBuf>,
    },
    /// HUME score per annotation and per translation.
    Score {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, default_value_t = DEFAULT_ORANGE_WEIGHT)]
        orange_weight: f64,
    },
    /// Inter-annotator agreement.
    Iaa {
        #[command(flatten)]
        inputs: Inputs,
        /// Sentence-length bin edges, comma separated.
        #[arg(long, value_delimiter = ',')]
        bins: Option<Vec<usize>>,
        /// Also write the confusion matrix as CSV.
        #[arg(long)]
        confusion_csv: Option<PathBuf>,
    },
    /// Median annotation time per annotator.
    Times {
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long, default_value_t = DEFAULT_OUTLIER_SECONDS)]
        outlier_threshold: i64,
    },
    /// Standardized crowd adequacy scores.
    Da {
        #[arg(long)]
        da: PathBuf,
        /// Keep only translations rated by exactly this many raters.
        #[arg(long)]
        raters: Option<usize>,
    },
    /// Correlate HUME with standardized DA.
    Correlate {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        da: PathBuf,
        #[arg(long)]
        raters: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_ORANGE_WEIGHT)]
        orange_weight: f64,
        /// Unit subset such as `atomic`, `C` or `P+S`; repeatable.
        #[arg(long = "subset")]
        subsets: Vec<UnitSubset>,
    },
    /// Load records into a project store.
    Import {
        #[arg(long, env = "HUME_DATA_DIR")]
        data_dir: PathBuf,
        #[arg(long)]
        graphs: Option<PathBuf>,
        #[arg(long)]
        translations: Option<PathBuf>,
        #[arg(long, requires = "translations")]
        alignments: Option<PathBuf>,
        #[arg(long)]
        da: Option<PathBuf>,
        #[arg(long = "annotator")]
        annotators: Vec<String>,
    },
    /// Write one export of a project store to stdout.
    Export {
        #[arg(long, env = "HUME_DATA_DIR")]
        data_dir: PathBuf,
        /// annotations, scores, iaa, times, da or correlations.
        kind: String,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run the annotation service.
    Serve {
        #[arg(long, env = "HUME_CONFIG")]
        config: Option<PathBuf>,
        #[arg(long)]
        listen: Option<String>,
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
}

enum Failure {
    Validation(String),
    Io(String),
    Empty(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Io(_) => 2,
            Failure::Empty(_) => 3,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Failure::Validation(_) => "validation",
            Failure::Io(_) => "io",
            Failure::Empty(_) => "empty_input",
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Io(m) | Failure::Empty(m) => m,
        }
    }
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<ReportError> for Failure {
    fn from(e: ReportError) -> Self {
        match e {
            ReportError::Empty(m) => Failure::Empty(m),
            other => Failure::Validation(other.to_string()),
        }
    }
}

impl From<StoreError> for Failure {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Empty(m) => Failure::Empty(m),
            StoreError::Io(_) | StoreError::Corrupt { .. } => Failure::Io(e.to_string()),
            other => Failure::Validation(other.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn emit<T: Serialize>(json: bool, value: &T, text: impl FnOnce() -> String) {
    if json {
        println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
    } else {
        print!("{}", text());
    }
}

fn graph_map(path: &Path) -> Result<BTreeMap<String, UccaGraph>, Failure> {
    Ok(corpus::read_graphs(path)?
        .into_iter()
        .map(|g| (g.sentence_id().to_string(), g))
        .collect())
}

fn load(inputs: &Inputs) -> Result<(BTreeMap<String, UccaGraph>, Vec<SentenceAnnotation>), Failure> {
    let graphs = graph_map(&inputs.graphs)?;
    let annotations = corpus::read_annotations(&inputs.annotations)?;
    if annotations.is_empty() {
        return Err(Failure::Empty(format!("{} has no annotations", inputs.annotations.display())));
    }
    Ok((graphs, annotations))
}

#[derive(Serialize)]
struct Problem {
    source: String,
    id: String,
    message: String,
}

fn validate(
    json: bool,
    graphs: &Path,
    translations: Option<&Path>,
    alignments: Option<&Path>,
    annotations: Option<&Path>,
) -> Outcome {
    let mut problems = Vec::new();
    let mut problem = |source: &str, id: &str, message: String| {
        problems.push(Problem {
            source: source.into(),
            id: id.into(),
            message,
        })
    };
    let docs = corpus::read_graph_documents(graphs)?;
    if docs.is_empty() {
        return Err(Failure::Empty(format!("{} has no graphs", graphs.display())));
    }
    let mut batch = ImportBatch::default();
    for (i, doc) in docs.iter().enumerate() {
        let id = doc
            .get("sentence_id")
            .and_then(|v| v.as_str())
            .map(str::to_string)
            .unwrap_or_else(|| format!("#{}", i + 1));
        match UccaGraph::from_value(doc.clone()) {
            Ok(g) => {
                for w in g.warnings() {
                    log::warn!("{id}: {w}");
                }
            }
            Err(e) => problem("graph", &id, e.to_string()),
        }
    }
    batch.graphs = docs;
    if let Some(t) = translations {
        batch.translations = corpus::read_translations(t)?;
        if let Some(a) = alignments {
            batch.alignments = corpus::read_alignments(a, &batch.translations)?;
        }
    }
    let mut store = hume_core::corpus::Corpus::default();
    let (report, _) = store.import(batch);
    for r in report.rejected.iter().filter(|r| r.kind != "graph") {
        problem(&r.kind, &r.id, r.reason.clone());
    }
    let mut checked = 0;
    if let Some(path) = annotations {
        for a in corpus::read_annotations(path)? {
            checked += 1;
            let id = format!("{}/{}", a.translation_id, a.annotator_id);
            match store.graphs.get(&a.sentence_id) {
                None => problem("annotation", &id, format!("unknown sentence {:?}", a.sentence_id)),
                Some(g) => {
                    for v in validate_annotation(g, &a) {
                        problem("annotation", &id, serde_json::to_string(&v).expect("serializable"));
                    }
                }
            }
        }
    }
    let summary = json!({
        "graphs": store.graphs.len(),
        "translations": store.translations.len(),
        "alignments": store.alignments.len(),
        "annotations": checked,
        "problems": problems,
    });
    emit(json, &summary, || {
        let mut out = format!(
            "{} graphs, {} translations, {} alignments, {} annotations checked\n",
            store.graphs.len(),
            store.translations.len(),
            store.alignments.len(),
            checked
        );
        for p in &problems {
            out.push_str(&format!("{} {}: {}\n", p.source, p.id, p.message));
        }
        out
    });
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Failure::Validation(format!("{} problem(s) found", problems.len())))
    }
}

fn run(cli: Cli) -> Outcome {
    let json = cli.json;
    match cli.command {
        Command::Validate {
            graphs,
            translations,
            alignments,
            annotations,
        } => validate(
            json,
            &graphs,
            translations.as_deref(),
            alignments.as_deref(),
            annotations.as_deref(),
        ),
        Command::Score {
            inputs,
            orange_weight,
        } => {
            let (graphs, annotations) = load(&inputs)?;
            let r = report::scores_report(&graphs, &annotations, orange_weight)?;
            emit(json, &r, || r.to_text());
            Ok(())
        }
        Command::Iaa {
            inputs,
            bins,
            confusion_csv,
        } => {
            let (graphs, annotations) = load(&inputs)?;
            let r = report::iaa_report(&graphs, &annotations, bins.as_deref())?;
            if let Some(path) = confusion_csv {
                std::fs::write(&path, r.confusion.to_csv())
                    .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            }
            emit(json, &r, || r.to_text());
            Ok(())
        }
        Command::Times {
            annotations,
            outlier_threshold,
        } => {
            let anns = corpus::read_annotations(&annotations)?;
            let r = report::times_report(&anns, outlier_threshold)?;
            emit(json, &r, || r.to_text());
            Ok(())
        }
        Command::Da { da, raters } => {
            let records = corpus::read_da(&da)?;
            let r = report::da_report(
                &records,
                &DaOptions {
                    required_raters: raters,
                },
            )?;
            emit(json, &r, || report::da_text(&r));
            Ok(())
        }
        Command::Correlate {
            inputs,
            da,
            raters,
            orange_weight,
            subsets,
        } => {
            let (graphs, annotations) = load(&inputs)?;
            let records = corpus::read_da(&da)?;
            let options = ReportOptions {
                orange_weight,
                da: DaOptions {
                    required_raters: raters,
                },
                subsets,
                ..ReportOptions::default()
            };
            let r = report::correlation_report(&graphs, &annotations, &records, &options)?;
            emit(json, &r, || r.to_text());
            Ok(())
        }
        Command::Import {
            data_dir,
            graphs,
            translations,
            alignments,
            da,
            annotators,
        } => {
            let mut batch = ImportBatch {
                annotators,
                ..ImportBatch::default()
            };
            if let Some(g) = graphs {
                batch.graphs = corpus::read_graph_documents(&g)?;
            }
            if let Some(t) = translations {
                batch.translations = corpus::read_translations(&t)?;
                if let Some(a) = alignments {
                    batch.alignments = corpus::read_alignments(&a, &batch.translations)?;
                }
            }
            if let Some(d) = da {
                batch.da = corpus::read_da(&d)?;
            }
            if batch.is_empty() {
                return Err(Failure::Empty("nothing to import".into()));
            }
            let store = ProjectStore::open(hume_core::store::StoreOptions::new(data_dir))?;
            let r = store.import(batch)?;
            emit(json, &r, || {
                let mut out = format!(
                    "imported {} annotators, {} graphs, {} translations, {} alignments, {} DA ratings\n",
                    r.annotators, r.graphs, r.translations, r.alignments, r.da
                );
                for x in &r.rejected {
                    out.push_str(&format!("rejected {} {}: {}\n", x.kind, x.id, x.reason));
                }
                out
            });
            Ok(())
        }
        Command::Export {
            data_dir,
            kind,
            config,
        } => {
            let config = Config::load(config.as_deref()).map_err(|e| Failure::Io(e.to_string()))?;
            let mut options = config.store_options();
            options.data_dir = data_dir;
            let store = ProjectStore::open(options)?;
            print!("{}", store.export(&kind, &config.report_options())?);
            Ok(())
        }
        Command::Serve {
            config,
            listen,
            data_dir,
        } => {
            let mut config =
                Config::load(config.as_deref()).map_err(|e| Failure::Io(e.to_string()))?;
            if let Some(l) = listen {
                config.listen = l;
            }
            if let Some(d) = data_dir {
                config.data_dir = d;
            }
            let store = Arc::new(ProjectStore::open(config.store_options())?);
            if !config.annotators.is_empty() {
                store.import(ImportBatch {
                    annotators: config.annotators.clone(),
                    ..ImportBatch::default()
                })?;
            }
            let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::Io(e.to_string()))?;
            runtime
                .block_on(hume_core::service::serve(
                    store,
                    config.report_options(),
                    &config.listen,
                ))
                .map_err(|e| Failure::Io(format!("{}: {e}", config.listen)))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let error_json = cli.error_json;
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if error_json {
                eprintln!(
                    "{}",
                    json!({ "error": f.kind(), "message": f.message(), "exit_code": f.code() })
                );
            } else {
                eprintln!("error: {}", f.message());
            }
            ExitCode::from(f.code())
        }
    }
}
