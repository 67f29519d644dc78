//! Semi-uniform strategies: ε-greedy schedules, ε-first and the
//! multiple-epoch wrapper.

use serde::{Deserialize, Serialize};

use super::{check_arms, means, single_observation};
use crate::error::{invalid, Result};
use crate::log::PolicyDecision;
use crate::policy::{Policy, StepContext};
use crate::rng::RngStream;
use crate::stats::{argmax_tiebreak, ArmId, ArmStats};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EpsilonSchedule {
    Constant { epsilon: f64 },
    /// `min(1, epsilon0 / t)`.
    Vermorel { epsilon0: f64 },
    /// `min(1, (5K/d^2) ln(t-1) / (t-1))`.
    GreedyMix { d: f64, arms: usize },
    /// `min(1, cK / (d^2 t))`.
    EpsilonN { c: f64, d: f64, arms: usize },
    /// Full exploration for the first `ceil(epsilon0 * horizon)` steps.
    EpsilonFirst { epsilon0: f64, horizon: u64 },
}

impl EpsilonSchedule {
    pub fn validate(&self) -> Result<()> {
        let unit_d = |d: f64| {
            if d > 0.0 && d < 1.0 {
                Ok(())
            } else {
                Err(invalid("d", d, "must lie in (0, 1)"))
            }
        };
        let arms = |k: usize| check_arms(k).map(|_| ());
        match *self {
            EpsilonSchedule::Constant { epsilon } => {
                if !(0.0..=1.0).contains(&epsilon) {
                    return Err(invalid("epsilon", epsilon, "must lie in [0, 1]"));
                }
            }
            EpsilonSchedule::Vermorel { epsilon0 } => {
                if !(epsilon0 >= 0.0 && epsilon0.is_finite()) {
                    return Err(invalid("epsilon0", epsilon0, "must be finite and >= 0"));
                }
            }
            EpsilonSchedule::GreedyMix { d, arms: k } => {
                unit_d(d)?;
                arms(k)?;
            }
            EpsilonSchedule::EpsilonN { c, d, arms: k } => {
                if !(c > 0.0 && c.is_finite()) {
                    return Err(invalid("c", c, "must be > 0"));
                }
                unit_d(d)?;
                arms(k)?;
            }
            EpsilonSchedule::EpsilonFirst { epsilon0, horizon } => {
                if !(0.0..=1.0).contains(&epsilon0) {
                    return Err(invalid("epsilon0", epsilon0, "must lie in [0, 1]"));
                }
                if horizon == 0 {
                    return Err(invalid("horizon", 0.0, "must be >= 1"));
                }
            }
        }
        Ok(())
    }

    /// Exploration probability at step `t >= 1`.
    pub fn epsilon_at(&self, t: u64) -> f64 {
        let tf = t as f64;
        match *self {
            EpsilonSchedule::Constant { epsilon } => epsilon,
            EpsilonSchedule::Vermorel { epsilon0 } => (epsilon0 / tf).min(1.0),
            EpsilonSchedule::GreedyMix { d, arms } => {
                // ln(t-1) is undefined at t = 1 and zero at t = 2; both steps
                // explore fully so that the schedule stays non-increasing.
                if t <= 2 {
                    1.0
                } else {
                    let s = tf - 1.0;
                    (5.0 * arms as f64 / (d * d) * s.ln() / s).min(1.0)
                }
            }
            EpsilonSchedule::EpsilonN { c, d, arms } => (c * arms as f64 / (d * d * tf)).min(1.0),
            EpsilonSchedule::EpsilonFirst { epsilon0, horizon } => match epsilon_first_phase(t, horizon, epsilon0) {
                Phase::Explore => 1.0,
                Phase::Exploit => 0.0,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Explore,
    Exploit,
}

/// Explore iff `t <= ceil(epsilon0 * horizon)`.
pub fn epsilon_first_phase(t: u64, horizon: u64, epsilon0: f64) -> Phase {
    let budget = (epsilon0 * horizon as f64).ceil() as u64;
    if t <= budget {
        Phase::Explore
    } else {
        Phase::Exploit
    }
}

/// With probability `epsilon` a uniform arm, otherwise the greedy arm.
///
/// Always consumes one uniform draw for the coin, then either an index draw
/// or whatever the tie-breaking argmax needs.
pub fn select_semiuniform(stats: &[ArmStats], epsilon: f64, rng: &mut RngStream) -> Result<PolicyDecision> {
    check_arms(stats.len())?;
    if rng.uniform() < epsilon {
        Ok(PolicyDecision::single(ArmId(rng.index(stats.len()))))
    } else {
        let scores = means(stats);
        Ok(PolicyDecision::with_scores(argmax_tiebreak(&scores, rng)?, scores))
    }
}

/// ε-greedy driven by any schedule.
#[derive(Debug, Clone)]
pub struct EpsilonGreedy {
    schedule: EpsilonSchedule,
    stats: Vec<ArmStats>,
}

impl EpsilonGreedy {
    pub fn new(arms: usize, schedule: EpsilonSchedule) -> Result<Self> {
        check_arms(arms)?;
        schedule.validate()?;
        Ok(Self {
            schedule,
            stats: vec![ArmStats::new(); arms],
        })
    }

    pub fn stats(&self) -> &[ArmStats] {
        &self.stats
    }
}

impl Policy for EpsilonGreedy {
    fn name(&self) -> &'static str {
        "epsilon-greedy"
    }

    fn num_arms(&self) -> usize {
        self.stats.len()
    }

    fn select(&mut self, step: &StepContext<'_>, rng: &mut RngStream) -> Result<PolicyDecision> {
        select_semiuniform(&self.stats, self.schedule.epsilon_at(step.t), rng)
    }

    fn observe(&mut self, _step: &StepContext<'_>, arms: &[ArmId], rewards: &[f64]) -> Result<()> {
        let (i, r) = single_observation(arms, rewards, self.stats.len())?;
        self.stats[i].push(r)
    }
}

/// Pure exploration for `ceil(epsilon0 * H)` steps, then the best
/// empirical arm is frozen and played until the end.
#[derive(Debug, Clone)]
pub struct EpsilonFirst {
    epsilon0: f64,
    horizon: u64,
    stats: Vec<ArmStats>,
    frozen: Option<ArmId>,
}

impl EpsilonFirst {
    pub fn new(arms: usize, epsilon0: f64, horizon: u64) -> Result<Self> {
        check_arms(arms)?;
        EpsilonSchedule::EpsilonFirst { epsilon0, horizon }.validate()?;
        Ok(Self {
            epsilon0,
            horizon,
            stats: vec![ArmStats::new(); arms],
            frozen: None,
        })
    }

    pub fn frozen_arm(&self) -> Option<ArmId> {
        self.frozen
    }
}

impl Policy for EpsilonFirst {
    fn name(&self) -> &'static str {
        "epsilon-first"
    }

    fn num_arms(&self) -> usize {
        self.stats.len()
    }

    fn select(&mut self, step: &StepContext<'_>, rng: &mut RngStream) -> Result<PolicyDecision> {
        match epsilon_first_phase(step.t, self.horizon, self.epsilon0) {
            Phase::Explore => Ok(PolicyDecision::single(ArmId(rng.index(self.stats.len())))),
            Phase::Exploit => {
                if let Some(arm) = self.frozen {
                    return Ok(PolicyDecision::single(arm));
                }
                // Only explored arms compete; with no data at all every arm ties.
                let scores: Vec<f64> = if self.stats.iter().any(ArmStats::is_played) {
                    self.stats
                        .iter()
                        .map(|s| if s.is_played() { s.mean() } else { f64::NAN })
                        .collect()
                } else {
                    vec![0.0; self.stats.len()]
                };
                let arm = argmax_tiebreak(&scores, rng)?;
                self.frozen = Some(arm);
                Ok(PolicyDecision::with_scores(arm, scores))
            }
        }
    }

    fn observe(&mut self, _step: &StepContext<'_>, arms: &[ArmId], rewards: &[f64]) -> Result<()> {
        let (i, r) = single_observation(arms, rewards, self.stats.len())?;
        self.stats[i].push(r)
    }
}

/// Builds a fresh inner policy given the epoch length it will run for.
pub type PolicyFactory = Box<dyn Fn(u64) -> Result<Box<dyn Policy>> + Send + Sync>;

/// Restarts a fresh inner policy every `epoch_len` steps. The inner policy
/// sees epoch-local steps `1..=epoch_len`.
pub struct EpochWrapper {
    factory: PolicyFactory,
    epoch_len: u64,
    arms: usize,
    inner: Box<dyn Policy>,
    epoch_start: u64,
}

impl std::fmt::Debug for EpochWrapper {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EpochWrapper")
            .field("epoch_len", &self.epoch_len)
            .field("inner", &self.inner.name())
            .field("epoch_start", &self.epoch_start)
            .finish()
    }
}

impl EpochWrapper {
    pub fn new(factory: PolicyFactory, epoch_len: u64) -> Result<Self> {
        if epoch_len == 0 {
            return Err(invalid("epoch_length", 0.0, "must be >= 1"));
        }
        let inner = factory(epoch_len)?;
        Ok(Self {
            arms: inner.num_arms(),
            factory,
            epoch_len,
            inner,
            epoch_start: 1,
        })
    }

    pub fn inner(&self) -> &dyn Policy {
        self.inner.as_ref()
    }

    fn local(&self, t: u64) -> u64 {
        t - self.epoch_start + 1
    }
}

impl Policy for EpochWrapper {
    fn name(&self) -> &'static str {
        "epoch"
    }

    fn num_arms(&self) -> usize {
        self.arms
    }

    fn select(&mut self, step: &StepContext<'_>, rng: &mut RngStream) -> Result<PolicyDecision> {
        if step.t >= self.epoch_start + self.epoch_len {
            self.epoch_start += (step.t - self.epoch_start) / self.epoch_len * self.epoch_len;
            self.inner = (self.factory)(self.epoch_len)?;
        }
        let local = StepContext {
            t: self.local(step.t),
            context: step.context,
        };
        self.inner.select(&local, rng)
    }

    fn observe(&mut self, step: &StepContext<'_>, arms: &[ArmId], rewards: &[f64]) -> Result<()> {
        let local = StepContext {
            t: self.local(step.t),
            context: step.context,
        };
        self.inner.observe(&local, arms, rewards)
    }
}
