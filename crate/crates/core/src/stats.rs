//! Per-arm sufficient statistics and randomized argmax.

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, BanditError, Result};
use crate::rng::RngStream;

/// Index of an arm in `0..K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArmId(pub usize);

impl ArmId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl From<usize> for ArmId {
    fn from(i: usize) -> Self {
        ArmId(i)
    }
}

impl std::fmt::Display for ArmId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Running count, mean and second moment of one arm's rewards.
///
/// The mean is updated incrementally and the centered second moment with
/// Welford's recurrence, so neither drifts over very long horizons.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ArmStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl ArmStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_rewards(rewards: &[f64]) -> Result<Self> {
        let mut s = Self::new();
        for &r in rewards {
            s.push(r)?;
        }
        Ok(s)
    }

    pub fn push(&mut self, reward: f64) -> Result<()> {
        check_finite("ArmStats::push", reward)?;
        self.count += 1;
        let delta = reward - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (reward - self.mean);
        Ok(())
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sum of squared rewards, `sum x^2 = M2 + n * mean^2`.
    pub fn sum_squares(&self) -> f64 {
        self.m2 + self.count as f64 * self.mean * self.mean
    }

    /// Sum of squared deviations from the mean.
    pub fn centered_sum_squares(&self) -> f64 {
        self.m2.max(0.0)
    }

    /// Population variance (divides by `n`); zero for fewer than one reward.
    pub fn variance(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.centered_sum_squares() / self.count as f64
        }
    }

    /// Unbiased sample variance; `None` below two observations.
    pub fn sample_variance(&self) -> Option<f64> {
        (self.count >= 2).then(|| self.centered_sum_squares() / (self.count - 1) as f64)
    }

    pub fn sum(&self) -> f64 {
        self.mean * self.count as f64
    }

    pub fn is_played(&self) -> bool {
        self.count > 0
    }
}

/// Pure form of [`ArmStats::push`].
pub fn update_stats(stats: ArmStats, reward: f64) -> Result<ArmStats> {
    let mut s = stats;
    s.push(reward)?;
    Ok(s)
}

/// Index of a maximal score, ties broken uniformly at random.
///
/// NaN entries are skipped; `+inf` is a valid score and is how unplayed arms
/// are forced to the front. Randomness is consumed only when there is a tie.
pub fn argmax_tiebreak(scores: &[f64], rng: &mut RngStream) -> Result<ArmId> {
    if scores.is_empty() {
        return Err(BanditError::Empty("argmax_tiebreak"));
    }
    let mut best = f64::NEG_INFINITY;
    let mut ties: Vec<usize> = Vec::new();
    for (i, &s) in scores.iter().enumerate() {
        if s.is_nan() {
            continue;
        }
        if ties.is_empty() || s > best {
            best = s;
            ties.clear();
            ties.push(i);
        } else if s == best {
            ties.push(i);
        }
    }
    match ties.len() {
        0 => Err(BanditError::AllNaN),
        1 => Ok(ArmId(ties[0])),
        n => Ok(ArmId(ties[rng.index(n)])),
    }
}

/// The `m` largest scores, chosen by repeated [`argmax_tiebreak`] so that
/// `m = 1` consumes randomness exactly like a single argmax.
pub fn top_m_tiebreak(scores: &[f64], m: usize, rng: &mut RngStream) -> Result<Vec<ArmId>> {
    if m > scores.len() {
        return Err(BanditError::InvalidParameter {
            name: "m",
            value: m as f64,
            reason: "more plays than arms",
        });
    }
    let mut work = scores.to_vec();
    let mut out = Vec::with_capacity(m);
    for _ in 0..m {
        let arm = argmax_tiebreak(&work, rng)?;
        work[arm.0] = f64::NAN;
        out.push(arm);
    }
    Ok(out)
}

/// Greedy score of an arm: its empirical mean, or `+inf` when unplayed.
pub fn mean_or_sentinel(stats: &ArmStats) -> f64 {
    if stats.is_played() {
        stats.mean()
    } else {
        f64::INFINITY
    }
}
