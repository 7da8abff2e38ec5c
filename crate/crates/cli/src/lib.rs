//! Experiment harness for the `horopoints` crate: JSON configs in, CSV/JSON
//! payloads and a run manifest out.

use std::path::{Path, PathBuf};

pub mod config;
pub mod plot;
pub mod run;

pub use config::{ExperimentConfig, ExperimentKind, Schedule};
pub use run::{execute, run, Check, Format, Outcome, RunManifest};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "HOROPOINTS_OUT_DIR";

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("resource limit: {0}")]
    ResourceExhausted(String),
    #[error("no usable data to plot")]
    NoData,
    #[error(transparent)]
    Core(#[from] horopoints::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.to_path_buf(), source }
    }
}

/// Reads and parses a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    ExperimentConfig::from_json(&text)
}
