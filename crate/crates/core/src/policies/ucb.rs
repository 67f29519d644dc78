//! Optimistic index policies: UCB1, UCB2, UCB-Tuned, MOSS, KL-UCB and
//! Bayes-UCB.
//!
//! Every policy scores unplayed arms `+inf`, so the first `K` steps play each
//! arm once (in random order) before any index is compared.

use serde::{Deserialize, Serialize};

use super::{check_arms, require_unit, single_observation};
use crate::error::{invalid, Result};
use crate::log::PolicyDecision;
use crate::numeric::{beta_quantile, bisect_last_true, kl_div_bernoulli, normal_quantile, BISECTION_TOL};
use crate::policy::{Policy, StepContext};
use crate::rng::RngStream;
use crate::stats::{argmax_tiebreak, ArmId, ArmStats};

/// `mean + sqrt(2 ln t / n)`.
pub fn ucb1_index(mean: f64, n: u64, t: u64) -> f64 {
    mean + (2.0 * (t as f64).ln() / n as f64).sqrt()
}

/// `(1 + alpha)^r`.
pub fn ucb2_tau(r: u32, alpha: f64) -> f64 {
    (1.0 + alpha).powi(r as i32)
}

/// Plays in epoch `r`: `ceil((1+alpha)^(r+1) - (1+alpha)^r)`.
pub fn ucb2_epoch_plays(r: u32, alpha: f64) -> u64 {
    ((ucb2_tau(r + 1, alpha) - ucb2_tau(r, alpha)).ceil() as u64).max(1)
}

/// `mean + sqrt((1+alpha) ln(e n / tau(r)) / (2 tau(r)))`.
pub fn ucb2_index(mean: f64, r: u32, n: u64, alpha: f64) -> f64 {
    let tau = ucb2_tau(r, alpha);
    let log = (std::f64::consts::E * n as f64 / tau).ln().max(0.0);
    mean + ((1.0 + alpha) * log / (2.0 * tau)).sqrt()
}

/// UCB-Tuned: `mean + sqrt((ln t / n) min(1/4, V))`.
pub fn ucb_tuned_index(stats: &ArmStats, t: u64) -> f64 {
    let n = stats.count() as f64;
    let lnt = (t as f64).ln();
    // sumSquares / n - mean^2, taken from the centered moment for stability.
    let v = stats.variance() + (2.0 * lnt / n).sqrt();
    stats.mean() + (lnt / n * v.min(0.25)).sqrt()
}

/// MOSS: `mean + sqrt(max(0, ln(H / (K n))) / n)`.
pub fn moss_index(mean: f64, n: u64, horizon: u64, arms: usize) -> f64 {
    let log = (horizon as f64 / (arms as f64 * n as f64)).ln().max(0.0);
    mean + (log / n as f64).sqrt()
}

/// Largest `q` in `[mean, 1]` with `n d(mean, q) <= ln t + c ln ln t`.
pub fn kl_ucb_upper(mean: f64, n: u64, t: u64, c: f64) -> f64 {
    let lnt = (t as f64).ln();
    let rhs = if lnt >= 1.0 { lnt + c * lnt.ln() } else { lnt };
    if rhs <= 0.0 {
        return mean;
    }
    let n = n as f64;
    bisect_last_true(mean, 1.0, BISECTION_TOL, |q| n * kl_div_bernoulli(mean, q) <= rhs)
}

/// The `1 - 1/t` quantile of `Beta(a, b)`.
pub fn bayes_ucb_index(a: f64, b: f64, t: u64) -> f64 {
    beta_quantile(a, b, 1.0 - 1.0 / t as f64)
}

/// The `1 - 1/t` quantile of `Normal(mean, var)`.
pub fn bayes_ucb_gaussian_index(mean: f64, var: f64, t: u64) -> f64 {
    let level = 1.0 - 1.0 / t as f64;
    if var == 0.0 {
        return mean;
    }
    mean + var.sqrt() * normal_quantile(level)
}

fn sentinel_scores(stats: &[ArmStats], index: impl Fn(usize, &ArmStats) -> f64) -> Vec<f64> {
    stats
        .iter()
        .enumerate()
        .map(|(i, s)| if s.is_played() { index(i, s) } else { f64::INFINITY })
        .collect()
}

fn decide(scores: Vec<f64>, rng: &mut RngStream) -> Result<PolicyDecision> {
    let arm = argmax_tiebreak(&scores, rng)?;
    Ok(PolicyDecision::with_scores(arm, scores))
}

macro_rules! arm_count {
    () => {
        fn num_arms(&self) -> usize {
            self.stats.len()
        }
    };
}

#[derive(Debug, Clone)]
pub struct Ucb1 {
    stats: Vec<ArmStats>,
}

impl Ucb1 {
    pub fn new(arms: usize) -> Result<Self> {
        Ok(Self {
            stats: vec![ArmStats::new(); check_arms(arms)?],
        })
    }

    pub fn stats(&self) -> &[ArmStats] {
        &self.stats
    }
}

impl Policy for Ucb1 {
    fn name(&self) -> &'static str {
        "ucb1"
    }
    arm_count!();

    fn select(&mut self, step: &StepContext<'_>, rng: &mut RngStream) -> Result<PolicyDecision> {
        decide(sentinel_scores(&self.stats, |_, s| ucb1_index(s.mean(), s.count(), step.t)), rng)
    }

    fn observe(&mut self, _: &StepContext<'_>, arms: &[ArmId], rewards: &[f64]) -> Result<()> {
        let (i, r) = single_observation(arms, rewards, self.stats.len())?;
        self.stats[i].push(r)
    }
}

/// UCB2 plays the arm it selects for a whole epoch before re-scoring.
#[derive(Debug, Clone)]
pub struct Ucb2 {
    alpha: f64,
    stats: Vec<ArmStats>,
    epochs: Vec<u32>,
    /// Arm being played and the plays left in its epoch.
    current: Option<(ArmId, u64)>,
    plays: u64,
}

impl Ucb2 {
    pub fn new(arms: usize, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid("alpha", alpha, "must lie in (0, 1)"));
        }
        let k = check_arms(arms)?;
        Ok(Self {
            alpha,
            stats: vec![ArmStats::new(); k],
            epochs: vec![0; k],
            current: None,
            plays: 0,
        })
    }

    pub fn epochs(&self) -> &[u32] {
        &self.epochs
    }

    /// Arm in play and the plays remaining in its epoch.
    pub fn current(&self) -> Option<(ArmId, u64)> {
        self.current
    }
}

impl Policy for Ucb2 {
    fn name(&self) -> &'static str {
        "ucb2"
    }
    arm_count!();

    fn select(&mut self, _: &StepContext<'_>, rng: &mut RngStream) -> Result<PolicyDecision> {
        if let Some((arm, left)) = self.current {
            if left > 0 {
                return Ok(PolicyDecision::single(arm));
            }
        }
        let n = self.plays.max(1);
        let scores = sentinel_scores(&self.stats, |i, s| ucb2_index(s.mean(), self.epochs[i], n, self.alpha));
        let arm = argmax_tiebreak(&scores, rng)?;
        if self.stats[arm.0].is_played() {
            let len = ucb2_epoch_plays(self.epochs[arm.0], self.alpha);
            self.epochs[arm.0] += 1;
            self.current = Some((arm, len));
        } else {
            // Initial single play of each arm is not an epoch.
            self.current = Some((arm, 1));
        }
        Ok(PolicyDecision::with_scores(arm, scores))
    }

    fn observe(&mut self, _: &StepContext<'_>, arms: &[ArmId], rewards: &[f64]) -> Result<()> {
        let (i, r) = single_observation(arms, rewards, self.stats.len())?;
        self.stats[i].push(r)?;
        self.plays += 1;
        if let Some((arm, left)) = &mut self.current {
            if arm.0 == i {
                *left = left.saturating_sub(1);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct UcbTuned {
    stats: Vec<ArmStats>,
}

impl UcbTuned {
    pub fn new(arms: usize) -> Result<Self> {
        Ok(Self {
            stats: vec![ArmStats::new(); check_arms(arms)?],
        })
    }

    pub fn stats(&self) -> &[ArmStats] {
        &self.stats
    }
}

impl Policy for UcbTuned {
    fn name(&self) -> &'static str {
        "ucb-tuned"
    }
    arm_count!();

    fn select(&mut self, step: &StepContext<'_>, rng: &mut RngStream) -> Result<PolicyDecision> {
        decide(sentinel_scores(&self.stats, |_, s| ucb_tuned_index(s, step.t)), rng)
    }

    fn observe(&mut self, _: &StepContext<'_>, arms: &[ArmId], rewards: &[f64]) -> Result<()> {
        let (i, r) = single_observation(arms, rewards, self.stats.len())?;
        self.stats[i].push(r)
    }
}

#[derive(Debug, Clone)]
pub struct Moss {
    horizon: u64,
    stats: Vec<ArmStats>,
}

impl Moss {
    pub fn new(arms: usize, horizon: u64) -> Result<Self> {
        let k = check_arms(arms)?;
        if horizon < k as u64 {
            return Err(invalid("horizon", horizon as f64, "MOSS needs H >= K"));
        }
        Ok(Self {
            horizon,
            stats: vec![ArmStats::new(); k],
        })
    }
}

impl Policy for Moss {
    fn name(&self) -> &'static str {
        "moss"
    }
    arm_count!();

    fn select(&mut self, _: &StepContext<'_>, rng: &mut RngStream) -> Result<PolicyDecision> {
        let k = self.stats.len();
        decide(sentinel_scores(&self.stats, |_, s| moss_index(s.mean(), s.count(), self.horizon, k)), rng)
    }

    fn observe(&mut self, _: &StepContext<'_>, arms: &[ArmId], rewards: &[f64]) -> Result<()> {
        let (i, r) = single_observation(arms, rewards, self.stats.len())?;
        self.stats[i].push(r)
    }
}

/// KL-UCB for rewards in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct KlUcb {
    c: f64,
    stats: Vec<ArmStats>,
}

impl KlUcb {
    pub fn new(arms: usize, c: f64) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(invalid("c", c, "must be finite and >= 0"));
        }
        Ok(Self {
            c,
            stats: vec![ArmStats::new(); check_arms(arms)?],
        })
    }
}

impl Policy for KlUcb {
    fn name(&self) -> &'static str {
        "kl-ucb"
    }
    arm_count!();

    fn select(&mut self, step: &StepContext<'_>, rng: &mut RngStream) -> Result<PolicyDecision> {
        decide(
            sentinel_scores(&self.stats, |_, s| kl_ucb_upper(s.mean().clamp(0.0, 1.0), s.count(), step.t, self.c)),
            rng,
        )
    }

    fn observe(&mut self, _: &StepContext<'_>, arms: &[ArmId], rewards: &[f64]) -> Result<()> {
        let (i, r) = single_observation(arms, rewards, self.stats.len())?;
        self.stats[i].push(require_unit(r)?)
    }
}

/// Conjugate model used by Bayes-UCB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BayesPrior {
    /// Bernoulli likelihood with a `Beta(a, b)` prior.
    Beta { a: f64, b: f64 },
    /// Gaussian likelihood with known `noise_var` and a `Normal(mean, var)` prior.
    Normal { mean: f64, var: f64, noise_var: f64 },
}

impl Default for BayesPrior {
    fn default() -> Self {
        BayesPrior::Beta { a: 1.0, b: 1.0 }
    }
}

impl BayesPrior {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BayesPrior::Beta { a, b } => {
                if !(a > 0.0 && b > 0.0) {
                    return Err(invalid("a, b", a.min(b), "Beta parameters must be > 0"));
                }
            }
            BayesPrior::Normal { mean, var, noise_var } => {
                if !mean.is_finite() || !(var > 0.0) || !(noise_var > 0.0) {
                    return Err(invalid("var", var, "need finite mean and positive variances"));
                }
            }
        }
        Ok(())
    }

    /// Posterior `(a, b)` or `(mean, var)` after observing `stats`.
    pub fn posterior(&self, stats: &ArmStats) -> (f64, f64) {
        let n = stats.count() as f64;
        match *self {
            BayesPrior::Beta { a, b } => (a + stats.sum(), b + n - stats.sum()),
            BayesPrior::Normal { mean, var, noise_var } => {
                let precision = 1.0 / var + n / noise_var;
                ((mean / var + stats.sum() / noise_var) / precision, 1.0 / precision)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct BayesUcb {
    prior: BayesPrior,
    stats: Vec<ArmStats>,
}

impl BayesUcb {
    pub fn new(arms: usize, prior: BayesPrior) -> Result<Self> {
        prior.validate()?;
        Ok(Self {
            prior,
            stats: vec![ArmStats::new(); check_arms(arms)?],
        })
    }

    pub fn index(&self, arm: usize, t: u64) -> f64 {
        let (p, q) = self.prior.posterior(&self.stats[arm]);
        match self.prior {
            BayesPrior::Beta { .. } => bayes_ucb_index(p, q, t),
            BayesPrior::Normal { .. } => bayes_ucb_gaussian_index(p, q, t),
        }
    }
}

impl Policy for BayesUcb {
    fn name(&self) -> &'static str {
        "bayes-ucb"
    }
    arm_count!();

    fn select(&mut self, step: &StepContext<'_>, rng: &mut RngStream) -> Result<PolicyDecision> {
        decide(sentinel_scores(&self.stats, |i, _| self.index(i, step.t)), rng)
    }

    fn observe(&mut self, _: &StepContext<'_>, arms: &[ArmId], rewards: &[f64]) -> Result<()> {
        let (i, r) = single_observation(arms, rewards, self.stats.len())?;
        let r = match self.prior {
            BayesPrior::Beta { .. } => require_unit(r)?,
            BayesPrior::Normal { .. } => r,
        };
        self.stats[i].push(r)
    }
}
