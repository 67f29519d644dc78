//! Regret measures computed from a [`PullLog`] and the environment oracle.
//!
//! All series are cumulative and indexed by step: element `t - 1` holds the
//! value after step `t`.

use serde::{Deserialize, Serialize};

use crate::env::Environment;
use crate::error::{invalid, BanditError, Result};
use crate::log::{Action, LogEntry, PullLog};
use crate::numeric::normal_quantile;
use crate::rng::RngStream;
use crate::stats::{ArmId, ArmStats};

/// Expectations are compared with this slack when deciding optimality.
const TIE_TOL: f64 = 1e-12;

/// Per-step oracle value and expectation of what was played.
fn step_values(env: &Environment, e: &LogEntry) -> Result<(f64, f64)> {
    let ctx = e.context.as_deref();
    match &e.action {
        Action::Point(x) => {
            let (_, best) = env.oracle_best(e.step, None)?;
            Ok((best, env.expected_point(*x)?))
        }
        Action::Arms(arms) if arms.len() == 1 => {
            let (_, best) = env.oracle_best(e.step, ctx)?;
            Ok((best, env.expected(arms[0], e.step, ctx)?))
        }
        Action::Arms(arms) => {
            let (_, best) = env.oracle_top_m(e.step, ctx, arms.len())?;
            let mut got = 0.0;
            for &a in arms {
                got += env.expected(a, e.step, ctx)?;
            }
            Ok((best, got))
        }
    }
}

fn cumulative(values: impl Iterator<Item = Result<f64>>) -> Result<Vec<f64>> {
    let mut acc = 0.0;
    values
        .map(|v| {
            acc += v?;
            Ok(acc)
        })
        .collect()
}

/// `sum_t (max_i E[x_i,t] - E[x_S_t,t])`; multiple plays compare with the
/// best `m`-subset.
pub fn expected_expected_regret(log: &PullLog, env: &Environment) -> Result<Vec<f64>> {
    cumulative(log.entries().iter().map(|e| step_values(env, e).map(|(b, g)| b - g)))
}

/// `sum_t (max_i E[x_i,t] - x_S_t,t)` with realized rewards; may be negative.
pub fn expected_payoff_regret(log: &PullLog, env: &Environment) -> Result<Vec<f64>> {
    cumulative(
        log.entries()
            .iter()
            .map(|e| step_values(env, e).map(|(b, _)| b - e.total_reward())),
    )
}

/// Number of steps whose choice was not expectation-maximal.
pub fn suboptimal_plays(log: &PullLog, env: &Environment) -> Result<Vec<u64>> {
    let mut n = 0;
    log.entries()
        .iter()
        .map(|e| {
            let (best, got) = step_values(env, e)?;
            if got < best - TIE_TOL * best.abs().max(1.0) {
                n += 1;
            }
            Ok(n)
        })
        .collect()
}

/// Best fixed action in hindsight minus realized reward:
/// `max_i sum_{s<=t} E[x_i,s] - sum_{s<=t} x_S_s,s`.
///
/// For an oblivious adversary the expectations are the rewards themselves,
/// so this is the usual weak regret. Multiple plays compare with the best
/// fixed `m`-subset; continuum logs compare with the oracle point.
pub fn weak_regret(log: &PullLog, env: &Environment) -> Result<Vec<f64>> {
    let k = env.num_arms();
    let mut totals = vec![0.0; k.unwrap_or(0)];
    let mut realized = 0.0;
    let mut oracle = 0.0;
    let mut out = Vec::with_capacity(log.len());
    for e in log.entries() {
        realized += e.total_reward();
        match (&e.action, k) {
            (Action::Arms(arms), Some(_)) => {
                let ctx = e.context.as_deref();
                for (i, v) in env.expected_all(e.step, ctx)?.into_iter().enumerate() {
                    totals[i] += v;
                }
                out.push(top_sum(&totals, arms.len()) - realized);
            }
            _ => {
                oracle += env.oracle_best(e.step, None)?.1;
                out.push(oracle - realized);
            }
        }
    }
    Ok(out)
}

fn top_sum(values: &[f64], m: usize) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v[..m.min(v.len())].iter().sum()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RegretSeries {
    pub ee: Vec<f64>,
    pub ep: Vec<f64>,
    pub suboptimal: Vec<u64>,
    pub weak: Vec<f64>,
}

impl RegretSeries {
    pub fn compute(log: &PullLog, env: &Environment) -> Result<Self> {
        Ok(Self {
            ee: expected_expected_regret(log, env)?,
            ep: expected_payoff_regret(log, env)?,
            suboptimal: suboptimal_plays(log, env)?,
            weak: weak_regret(log, env)?,
        })
    }
}

/// How per-arm confidence intervals are formed for statistical regret.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum IntervalMethod {
    /// `mean ± z s / sqrt(n)`; needs two plays per arm.
    Parametric,
    /// Percentile interval of resampled means; needs one play per arm.
    Bootstrap { resamples: usize },
}

impl Default for IntervalMethod {
    fn default() -> Self {
        IntervalMethod::Bootstrap { resamples: 1000 }
    }
}

/// Statistical regret, or why it cannot be formed from this log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum StatisticalRegret {
    Defined { lo: Vec<f64>, hi: Vec<f64> },
    Undefined { arm: usize, plays: usize, needed: usize },
}

impl StatisticalRegret {
    pub fn finals(&self) -> Option<(f64, f64)> {
        match self {
            StatisticalRegret::Defined { lo, hi } => Some((*lo.last()?, *hi.last()?)),
            StatisticalRegret::Undefined { .. } => None,
        }
    }
}

/// Linear-interpolation quantile of sorted data.
fn sorted_quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

/// Percentile bootstrap interval of the mean at level `level`.
pub fn bootstrap_interval(rewards: &[f64], level: f64, resamples: usize, rng: &mut RngStream) -> Result<(f64, f64)> {
    if rewards.is_empty() {
        return Err(BanditError::Empty("bootstrap sample"));
    }
    if resamples == 0 {
        return Err(invalid("resamples", 0.0, "need at least one resample"));
    }
    let n = rewards.len();
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| rewards[rng.index(n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok((sorted_quantile(&means, tail), sorted_quantile(&means, 1.0 - tail)))
}

/// Normal-approximation interval of the mean at level `level`.
pub fn parametric_interval(stats: &ArmStats, level: f64) -> Option<(f64, f64)> {
    let s2 = stats.sample_variance()?;
    let z = normal_quantile(0.5 + level / 2.0);
    let half = z * (s2 / stats.count() as f64).sqrt();
    Some((stats.mean() - half, stats.mean() + half))
}

/// Per-arm intervals from all rewards in the log.
pub fn arm_intervals(
    log: &PullLog,
    arms: usize,
    level: f64,
    method: IntervalMethod,
    rng: &mut RngStream,
) -> Result<std::result::Result<Vec<(f64, f64)>, StatisticalRegret>> {
    if !(0.0..1.0).contains(&level) {
        return Err(invalid("level", level, "confidence level must lie in [0, 1)"));
    }
    let by_arm = log.rewards_by_arm(arms);
    let needed = match method {
        IntervalMethod::Parametric => 2,
        IntervalMethod::Bootstrap { .. } => 1,
    };
    if let Some((arm, r)) = by_arm.iter().enumerate().find(|(_, r)| r.len() < needed) {
        return Ok(Err(StatisticalRegret::Undefined {
            arm,
            plays: r.len(),
            needed,
        }));
    }
    let mut out = Vec::with_capacity(arms);
    for r in &by_arm {
        out.push(match method {
            IntervalMethod::Parametric => parametric_interval(&ArmStats::from_rewards(r)?, level).expect("two plays"),
            IntervalMethod::Bootstrap { resamples } => bootstrap_interval(r, level, resamples, rng)?,
        });
    }
    Ok(Ok(out))
}

/// Statistical regret with final-time intervals applied to every step:
/// `lo_t = sum_{j<=t} (max_i L_i - x_S_j)` and likewise `hi_t` with `U`.
/// Multiple plays use the sum of the `m` largest bounds.
pub fn statistical_regret(
    log: &PullLog,
    arms: usize,
    level: f64,
    method: IntervalMethod,
    rng: &mut RngStream,
) -> Result<StatisticalRegret> {
    if log.entries().iter().any(|e| matches!(e.action, Action::Point(_))) {
        return Err(BanditError::Unsupported(
            "statistical regret needs discrete arms".into(),
        ));
    }
    let intervals = match arm_intervals(log, arms, level, method, rng)? {
        Ok(iv) => iv,
        Err(undefined) => return Ok(undefined),
    };
    let lows: Vec<f64> = intervals.iter().map(|iv| iv.0).collect();
    let highs: Vec<f64> = intervals.iter().map(|iv| iv.1).collect();
    let (mut lo, mut hi) = (Vec::with_capacity(log.len()), Vec::with_capacity(log.len()));
    let (mut acc_lo, mut acc_hi) = (0.0, 0.0);
    for e in log.entries() {
        let m = match &e.action {
            Action::Arms(a) => a.len(),
            Action::Point(_) => unreachable!(),
        };
        acc_lo += top_sum(&lows, m) - e.total_reward();
        acc_hi += top_sum(&highs, m) - e.total_reward();
        lo.push(acc_lo);
        hi.push(acc_hi);
    }
    Ok(StatisticalRegret::Defined { lo, hi })
}

/// Chosen arms of a discrete log, one list per step.
pub fn chosen_arms(log: &PullLog) -> Vec<Vec<ArmId>> {
    log.entries()
        .iter()
        .map(|e| match &e.action {
            Action::Arms(a) => a.clone(),
            Action::Point(_) => Vec::new(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{ArmDistribution, EnvironmentSpec, Segment};
    use approx::assert_abs_diff_eq;

    fn bern(ps: &[f64]) -> Environment {
        EnvironmentSpec::Stochastic {
            arms: ps.iter().map(|&p| ArmDistribution::bernoulli(p)).collect(),
        }
        .build()
        .unwrap()
    }

    fn log_of(arms: &[usize], rewards: &[f64]) -> PullLog {
        let mut log = PullLog::new();
        for (&a, &r) in arms.iter().zip(rewards) {
            log.record_arms(vec![ArmId(a)], vec![r], None).unwrap();
        }
        log
    }

    #[test]
    fn ee_examples() {
        let env = bern(&[0.9, 0.6]);
        let best = log_of(&[0; 10], &[1.0; 10]);
        assert!(expected_expected_regret(&best, &env).unwrap().iter().all(|&v| v == 0.0));
        let worst = log_of(&[1; 10], &[0.0; 10]);
        assert_abs_diff_eq!(*expected_expected_regret(&worst, &env).unwrap().last().unwrap(), 3.0, epsilon = 1e-12);
        assert_eq!(*suboptimal_plays(&worst, &env).unwrap().last().unwrap(), 10);
        assert_eq!(*suboptimal_plays(&best, &env).unwrap().last().unwrap(), 0);

        let switching = EnvironmentSpec::Switching {
            segments: vec![
                Segment {
                    start: 1,
                    arms: vec![ArmDistribution::bernoulli(0.9), ArmDistribution::bernoulli(0.6)],
                },
                Segment {
                    start: 6,
                    arms: vec![ArmDistribution::bernoulli(0.2), ArmDistribution::bernoulli(0.8)],
                },
            ],
        }
        .build()
        .unwrap();
        let zero = log_of(&[0; 10], &[0.0; 10]);
        assert_abs_diff_eq!(*expected_expected_regret(&zero, &switching).unwrap().last().unwrap(), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn ep_may_be_negative() {
        let env = bern(&[0.9, 0.6]);
        let log = log_of(&[0], &[1.0]);
        assert_abs_diff_eq!(expected_payoff_regret(&log, &env).unwrap()[0], -0.1, epsilon = 1e-12);
    }

    #[test]
    fn ties_are_optimal() {
        let env = bern(&[0.5, 0.5]);
        let log = log_of(&[0, 1, 1, 0], &[1.0, 0.0, 1.0, 0.0]);
        assert_eq!(suboptimal_plays(&log, &env).unwrap(), vec![0, 0, 0, 0]);
    }

    #[test]
    fn deterministic_arms_degenerate_intervals() {
        let env = EnvironmentSpec::Adversarial {
            rewards: vec![vec![1.0, 0.0], vec![1.0, 0.0]],
        }
        .build()
        .unwrap();
        let log = log_of(&[0, 1], &[1.0, 0.0]);
        let mut rng = RngStream::new(0, 2);
        let s = statistical_regret(&log, 2, 0.9, IntervalMethod::default(), &mut rng).unwrap();
        assert_eq!(s.finals(), Some((1.0, 1.0)));
        assert_eq!(
            expected_expected_regret(&log, &env).unwrap(),
            expected_payoff_regret(&log, &env).unwrap()
        );
        let p = statistical_regret(&log, 2, 0.9, IntervalMethod::Parametric, &mut rng).unwrap();
        assert_eq!(
            p,
            StatisticalRegret::Undefined {
                arm: 0,
                plays: 1,
                needed: 2
            }
        );
    }

    #[test]
    fn zero_level_is_plug_in() {
        let log = log_of(&[0, 1, 0, 1, 0], &[1.0, 0.0, 0.0, 1.0, 1.0]);
        let mut rng = RngStream::new(0, 2);
        let s = statistical_regret(&log, 2, 0.0, IntervalMethod::Parametric, &mut rng).unwrap();
        let plug_in: f64 = 5.0 * (2.0 / 3.0) - 3.0;
        let (lo, hi) = s.finals().unwrap();
        assert_abs_diff_eq!(lo, plug_in, epsilon = 1e-12);
        assert_abs_diff_eq!(hi, plug_in, epsilon = 1e-12);
    }

    #[test]
    fn constant_arm_bootstrap_is_zero_width() {
        let mut rng = RngStream::new(0, 2);
        let (lo, hi) = bootstrap_interval(&[0.4; 7], 0.95, 200, &mut rng).unwrap();
        assert_eq!(lo, hi);
        assert_abs_diff_eq!(lo, 0.4, epsilon = 1e-15);
    }

    #[test]
    fn weak_regret_uses_best_fixed_arm() {
        let env = EnvironmentSpec::Adversarial {
            rewards: vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0]],
        }
        .build()
        .unwrap();
        let log = log_of(&[0, 0, 0], &[1.0, 0.0, 0.0]);
        assert_eq!(weak_regret(&log, &env).unwrap(), vec![0.0, 0.0, 1.0]);
    }
}
