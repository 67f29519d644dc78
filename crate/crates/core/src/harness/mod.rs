//! Configuration, replicated execution, bound checks and result files.

pub mod bounds;
pub mod config;
pub mod output;
pub mod runner;

use std::path::PathBuf;

use crate::error::BanditError;

pub use bounds::{evaluate_bound, BoundCheck, BoundSpec, Verdict};
pub use config::{Agent, ExperimentConfig, Metric, PolicySpec, StatisticalConfig, CATALOG};
pub use output::{emit_outputs, Summary};
pub use runner::{run_experiment, run_replication, ExperimentResult, Replication};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    /// The configuration is malformed or describes an impossible experiment.
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Bandit(#[from] BanditError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Runtime(String),
}

impl HarnessError {
    pub fn is_config(&self) -> bool {
        matches!(self, HarnessError::Config(_))
    }
}
