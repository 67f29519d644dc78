//! Multi-armed bandit policies, reward environments, regret measures and a
//! deterministic replicated simulation harness.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod env;
pub mod error;
pub mod harness;
pub mod log;
pub mod numeric;
pub mod policies;
pub mod policy;
pub mod regret;
pub mod rng;
pub mod stats;

pub use env::{ArmDistribution, Environment, EnvironmentSpec, OracleChoice};
pub use error::{BanditError, Result};
pub use harness::{run_experiment, ExperimentConfig, ExperimentResult, HarnessError, PolicySpec};
pub use log::{Action, LogEntry, PolicyDecision, PullLog};
pub use policy::{ContinuumPolicy, Policy, StepContext};
pub use regret::{RegretSeries, StatisticalRegret};
pub use rng::RngStream;
pub use stats::{argmax_tiebreak, top_m_tiebreak, update_stats, ArmId, ArmStats};
