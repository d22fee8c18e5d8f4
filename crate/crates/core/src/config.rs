//! Service configuration: a TOML file, then `HUME_*` environment overrides.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::analytics::{DaOptions, DEFAULT_OUTLIER_SECONDS};
use crate::annotation::DEFAULT_ORANGE_WEIGHT;
use crate::report::ReportOptions;
use crate::store::StoreOptions;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parsing {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{key}={value:?}: {message}")]
    Env {
        key: String,
        value: String,
        message: String,
    },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub listen: String,
    pub data_dir: PathBuf,
    /// Fraction of translations every annotator sees.
    pub overlap: f64,
    pub annotators: Vec<String>,
    pub orange_weight: f64,
    pub outlier_seconds: i64,
    pub da_raters: Option<usize>,
    pub length_bins: Option<Vec<usize>>,
    pub compact_every: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            listen: "127.0.0.1:8080".into(),
            data_dir: PathBuf::from("hume-data"),
            overlap: 1.0,
            annotators: Vec::new(),
            orange_weight: DEFAULT_ORANGE_WEIGHT,
            outlier_seconds: DEFAULT_OUTLIER_SECONDS,
            da_raters: None,
            length_bins: None,
            compact_every: 10_000,
        }
    }
}

fn parse_env<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.trim().parse().map_err(|e: T::Err| ConfigError::Env {
        key: key.into(),
        value: value.into(),
        message: e.to_string(),
    })
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_env(key, s))
        .collect()
}

impl Config {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Defaults, overlaid by `path` if given, then by the process environment.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
                    path: p.to_path_buf(),
                    source,
                })?;
                Self::from_toml(&text, p)?
            }
            None => Self::default(),
        };
        config.apply_env(std::env::vars())?;
        config.validate()?;
        Ok(config)
    }

    pub fn apply_env(
        &mut self,
        vars: impl IntoIterator<Item = (String, String)>,
    ) -> Result<(), ConfigError> {
        for (key, value) in vars {
            match key.as_str() {
                "HUME_LISTEN" => self.listen = value,
                "HUME_DATA_DIR" => self.data_dir = value.into(),
                "HUME_OVERLAP" => self.overlap = parse_env(&key, &value)?,
                "HUME_ANNOTATORS" => self.annotators = parse_list(&key, &value)?,
                "HUME_ORANGE_WEIGHT" => self.orange_weight = parse_env(&key, &value)?,
                "HUME_OUTLIER_SECONDS" => self.outlier_seconds = parse_env(&key, &value)?,
                "HUME_DA_RATERS" => self.da_raters = Some(parse_env(&key, &value)?),
                "HUME_LENGTH_BINS" => self.length_bins = Some(parse_list(&key, &value)?),
                "HUME_COMPACT_EVERY" => self.compact_every = parse_env(&key, &value)?,
                _ => {}
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.overlap) {
            return Err(ConfigError::Invalid(format!(
                "overlap must be within [0, 1], got {}",
                self.overlap
            )));
        }
        if !self.orange_weight.is_finite() {
            return Err(ConfigError::Invalid("orange weight must be finite".into()));
        }
        if self.outlier_seconds < 0 {
            return Err(ConfigError::Invalid("outlier threshold must be non-negative".into()));
        }
        if let Some(bins) = &self.length_bins {
            if bins.windows(2).any(|w| w[0] >= w[1]) {
                return Err(ConfigError::Invalid("length bins must increase".into()));
            }
        }
        Ok(())
    }

    pub fn store_options(&self) -> StoreOptions {
        StoreOptions {
            data_dir: self.data_dir.clone(),
            overlap: self.overlap,
            compact_every: self.compact_every,
        }
    }

    pub fn report_options(&self) -> ReportOptions {
        ReportOptions {
            orange_weight: self.orange_weight,
            outlier_seconds: self.outlier_seconds,
            length_edges: self.length_bins.clone(),
            da: DaOptions {
                required_raters: self.da_raters,
            },
            subsets: Vec::new(),
        }
    }
}
