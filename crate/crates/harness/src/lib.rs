//! Experiment harness for `uavmec-core`: JSON configuration, training and
//! evaluation runs with CSV output, parameter sweeps and verification suites.

pub mod config;
pub mod run;
pub mod sweep;
pub mod verify;

use std::path::PathBuf;

use uavmec_core::agent::AgentError;

pub use config::{load_config, parse_config, AccessArg, AgentArg, ConfigError, DecodingArg, ExperimentConfig};
pub use run::{evaluate, run, RunArtifacts};
pub use sweep::{aggregate, final_window_eta, sweep, SweepPoint, SweepSummary};
pub use verify::{verify, Check, Suite, VerifyReport};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error("UnknownAxis: {0}")]
    UnknownAxis(String),
    #[error("no checkpoint at {0}")]
    MissingCheckpoint(PathBuf),
    #[error("{0}")]
    Invalid(String),
}

impl HarnessError {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        HarnessError::Io { context: context.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
