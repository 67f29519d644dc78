//! The append-only record of plays that every regret measure is computed from.

use serde::{Deserialize, Serialize};

use crate::error::{BanditError, Result};
use crate::stats::ArmId;

/// What a policy chose at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyDecision {
    pub arms: Vec<ArmId>,
    /// Optional per-arm diagnostic values (indices, samples, probabilities).
    pub scores: Option<Vec<f64>>,
}

impl PolicyDecision {
    pub fn single(arm: ArmId) -> Self {
        Self {
            arms: vec![arm],
            scores: None,
        }
    }

    pub fn with_scores(arm: ArmId, scores: Vec<f64>) -> Self {
        Self {
            arms: vec![arm],
            scores: Some(scores),
        }
    }

    pub fn multi(arms: Vec<ArmId>, scores: Option<Vec<f64>>) -> Self {
        Self { arms, scores }
    }

    /// The chosen arm of a single-play decision.
    pub fn arm(&self) -> ArmId {
        self.arms[0]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Action {
    /// One or more distinct discrete arms.
    Arms(Vec<ArmId>),
    /// A point of a continuum-armed problem.
    Point(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub step: u64,
    pub action: Action,
    pub rewards: Vec<f64>,
    pub context: Option<Vec<f64>>,
}

impl LogEntry {
    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }
}

/// Entries with steps `1, 2, 3, ...` in order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PullLog {
    entries: Vec<LogEntry>,
}

impl PullLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            entries: Vec::with_capacity(n),
        }
    }

    pub fn push(&mut self, entry: LogEntry) -> Result<()> {
        let expected = self.entries.len() as u64 + 1;
        if entry.step != expected {
            return Err(BanditError::Unsupported(format!(
                "log step {} out of order, expected {expected}",
                entry.step
            )));
        }
        if let Action::Arms(arms) = &entry.action {
            if arms.is_empty() || arms.len() != entry.rewards.len() {
                return Err(BanditError::Dimension {
                    expected: arms.len(),
                    got: entry.rewards.len(),
                });
            }
            let mut sorted = arms.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != arms.len() {
                return Err(BanditError::Unsupported(
                    "multi-play entry repeats an arm".into(),
                ));
            }
        }
        self.entries.push(entry);
        Ok(())
    }

    pub fn record_arms(&mut self, arms: Vec<ArmId>, rewards: Vec<f64>, context: Option<Vec<f64>>) -> Result<()> {
        let step = self.entries.len() as u64 + 1;
        self.push(LogEntry {
            step,
            action: Action::Arms(arms),
            rewards,
            context,
        })
    }

    pub fn record_point(&mut self, x: f64, reward: f64) -> Result<()> {
        let step = self.entries.len() as u64 + 1;
        self.push(LogEntry {
            step,
            action: Action::Point(x),
            rewards: vec![reward],
            context: None,
        })
    }

    pub fn entries(&self) -> &[LogEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Rewards observed for each discrete arm, in play order.
    pub fn rewards_by_arm(&self, arms: usize) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new(); arms];
        for e in &self.entries {
            if let Action::Arms(played) = &e.action {
                for (a, r) in played.iter().zip(&e.rewards) {
                    if a.0 < arms {
                        out[a.0].push(*r);
                    }
                }
            }
        }
        out
    }
}
