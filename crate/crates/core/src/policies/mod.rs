//! Every bandit policy, grouped by family.

pub mod adversarial;
pub mod contextual;
pub mod extended;
pub mod nonstationary;
pub mod sampling;
pub mod semiuniform;
pub mod ucb;

use crate::error::{check_finite, invalid, BanditError, Result};
use crate::stats::{ArmId, ArmStats};

/// Validate a single-play observation and return `(arm index, reward)`.
pub(crate) fn single_observation(arms: &[ArmId], rewards: &[f64], k: usize) -> Result<(usize, f64)> {
    if arms.len() != 1 || rewards.len() != 1 {
        return Err(BanditError::Dimension {
            expected: 1,
            got: arms.len().max(rewards.len()),
        });
    }
    let arm = arms[0].0;
    if arm >= k {
        return Err(BanditError::ArmOutOfRange { arm, arms: k });
    }
    Ok((arm, check_finite("observe", rewards[0])?))
}

pub(crate) fn check_arms(k: usize) -> Result<usize> {
    if k == 0 {
        Err(BanditError::Empty("arms"))
    } else {
        Ok(k)
    }
}

pub(crate) fn require_unit(r: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&r) {
        Ok(r)
    } else {
        Err(BanditError::RewardOutOfRange(r))
    }
}

pub(crate) fn means(stats: &[ArmStats]) -> Vec<f64> {
    stats.iter().map(crate::stats::mean_or_sentinel).collect()
}

/// Affine map from a declared reward range onto `[0, 1]`.
///
/// Exponential-weights policies assume bounded payoffs; the harness builds
/// one of these from the environment's reward bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardScale {
    lo: f64,
    hi: f64,
}

impl Default for RewardScale {
    fn default() -> Self {
        Self { lo: 0.0, hi: 1.0 }
    }
}

impl RewardScale {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(invalid("reward bounds", lo, "need finite lo < hi"));
        }
        Ok(Self { lo, hi })
    }

    pub fn apply(&self, r: f64) -> Result<f64> {
        let x = (r - self.lo) / (self.hi - self.lo);
        // Tolerate rounding at the edges of the declared range.
        if (-1e-12..=1.0 + 1e-12).contains(&x) {
            Ok(x.clamp(0.0, 1.0))
        } else {
            Err(BanditError::RewardOutOfRange(x))
        }
    }
}

/// Index of the first entry of `u`'s position in a cumulative distribution.
pub(crate) fn inverse_cdf(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding left `u` past the last partial sum: take the last arm with mass.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}
