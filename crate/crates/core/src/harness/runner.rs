//! Replicated, deterministic experiment execution.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bounds::{self, BoundCheck, BoundSpec};
use super::config::{Agent, ExperimentConfig, Metric};
use super::HarnessError;
use crate::env::Environment;
use crate::error::{BanditError, Result};
use crate::log::PullLog;
use crate::policy::StepContext;
use crate::regret::{self, StatisticalRegret};
use crate::rng::{substream, RngStream};
use crate::stats::ArmId;

/// One replication: full log plus the requested series, one per column.
pub struct Replication {
    pub log: PullLog,
    /// `None` when the column is undefined for this replication.
    pub series: Vec<Option<Vec<f64>>>,
    /// The continuum policy's recommended point at the horizon.
    pub recommendation: Option<f64>,
}

/// Run replication `r` of `config` on the pre-built `env`.
pub fn run_replication(config: &ExperimentConfig, env: &Environment, r: u64) -> Result<Replication> {
    let mut env_rng = RngStream::with_substream(config.seed, r, substream::ENVIRONMENT);
    let mut pol_rng = RngStream::with_substream(config.seed, r, substream::POLICY);
    let mut agent = config.policy.build(env, config.horizon)?;
    let mut log = PullLog::with_capacity(config.horizon as usize);
    let plays = config.policy.plays();
    for t in 1..=config.horizon {
        match &mut agent {
            Agent::Discrete(policy) => {
                let ctx = env.sample_context(&mut env_rng);
                let step = StepContext {
                    t,
                    context: ctx.as_deref(),
                };
                let decision = policy.select(&step, &mut pol_rng)?;
                if decision.arms.len() != plays {
                    return Err(BanditError::Dimension {
                        expected: plays,
                        got: decision.arms.len(),
                    });
                }
                let rewards = decision
                    .arms
                    .iter()
                    .map(|&a| env.sample_reward(a, t, ctx.as_deref(), &mut env_rng))
                    .collect::<Result<Vec<f64>>>()?;
                policy.observe(&step, &decision.arms, &rewards)?;
                log.record_arms(decision.arms, rewards, ctx)?;
            }
            Agent::Continuum(policy) => {
                let x = policy.select_point(t, &mut pol_rng)?;
                let reward = env.sample_point(x, &mut env_rng)?;
                policy.observe_point(x, reward)?;
                log.record_point(x, reward)?;
            }
        }
    }
    let recommendation = match &agent {
        Agent::Continuum(p) => Some(p.recommend()),
        Agent::Discrete(_) => None,
    };
    let series = compute_series(config, env, &log, r)?;
    Ok(Replication {
        log,
        series,
        recommendation,
    })
}

fn compute_series(config: &ExperimentConfig, env: &Environment, log: &PullLog, r: u64) -> Result<Vec<Option<Vec<f64>>>> {
    let mut metrics = config.metrics.clone();
    metrics.sort();
    metrics.dedup();
    let mut out = Vec::new();
    for m in metrics {
        match m {
            Metric::Ee => out.push(Some(regret::expected_expected_regret(log, env)?)),
            Metric::Ep => out.push(Some(regret::expected_payoff_regret(log, env)?)),
            Metric::Suboptimal => out.push(Some(
                regret::suboptimal_plays(log, env)?.into_iter().map(|n| n as f64).collect(),
            )),
            Metric::Weak => out.push(Some(regret::weak_regret(log, env)?)),
            Metric::Statistical => {
                let mut rng = RngStream::with_substream(config.seed, r, substream::METRICS);
                let arms = env.num_arms().unwrap_or(0);
                match regret::statistical_regret(
                    log,
                    arms,
                    config.statistical.level,
                    config.statistical.interval_method(),
                    &mut rng,
                )? {
                    StatisticalRegret::Defined { lo, hi } => {
                        out.push(Some(lo));
                        out.push(Some(hi));
                    }
                    StatisticalRegret::Undefined { .. } => {
                        out.push(None);
                        out.push(None);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Per-step running mean and variance over replications (Welford), fed in
/// replication order.
#[derive(Debug, Clone)]
struct Accumulator {
    n: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Accumulator {
    fn new(len: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; len],
            m2: vec![0.0; len],
        }
    }

    fn push(&mut self, xs: &[f64]) {
        self.n += 1;
        let n = self.n as f64;
        for ((m, s), &x) in self.mean.iter_mut().zip(&mut self.m2).zip(xs) {
            let d = x - *m;
            *m += d / n;
            *s += d * (x - *m);
        }
    }

    /// Sample standard deviation; zero for fewer than two replications.
    fn sd(&self) -> Vec<f64> {
        if self.n < 2 {
            return vec![0.0; self.m2.len()];
        }
        self.m2.iter().map(|s| (s / (self.n - 1) as f64).sqrt()).collect()
    }

    fn mean_or_nan(&self) -> Vec<f64> {
        if self.n == 0 {
            vec![f64::NAN; self.mean.len()]
        } else {
            self.mean.clone()
        }
    }
}

/// Aggregated series for one output column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub name: String,
    /// Replications in which the column was defined.
    pub defined: u64,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub columns: Vec<ColumnSummary>,
    /// Final value of every column for every replication (NaN where undefined).
    pub finals: Vec<Vec<f64>>,
    /// Continuum recommendations, one per replication.
    pub recommendations: Vec<f64>,
    pub bounds: Vec<BoundCheck>,
    pub wall_time_secs: f64,
}

impl ExperimentResult {
    pub fn column(&self, name: &str) -> Option<&ColumnSummary> {
        self.columns.iter().find(|c| c.name == name)
    }

    /// Per-replication final values of one column.
    pub fn finals_of(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c.name == name)?;
        Some(self.finals.iter().map(|row| row[i]).collect())
    }

    /// Mean of `name` after step `t`.
    pub fn mean_at(&self, name: &str, t: u64) -> Option<f64> {
        self.column(name)?.mean.get(t.checked_sub(1)? as usize).copied()
    }
}

/// Run every replication, using at most `workers` threads (all cores when
/// `None`). Aggregates do not depend on the worker count.
pub fn run_experiment(config: &ExperimentConfig, workers: Option<usize>) -> std::result::Result<ExperimentResult, HarnessError> {
    let env = config.validate()?;
    let started = Instant::now();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        if w == 0 {
            return Err(HarnessError::Config("workers must be >= 1".into()));
        }
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| HarnessError::Runtime(format!("thread pool: {e}")))?;
    let names = config.columns();
    let h = config.horizon as usize;
    let mut accs: Vec<Accumulator> = names.iter().map(|_| Accumulator::new(h)).collect();
    let mut finals = Vec::with_capacity(config.replications as usize);
    let mut recommendations = Vec::new();
    // Bounded batches keep memory flat; within a batch results come back in
    // replication order, so the reduction order is fixed.
    let batch = (pool.current_num_threads() * 4).max(1) as u64;
    let total = config.replications as u64;
    let mut start = 0;
    while start < total {
        let end = (start + batch).min(total);
        let reps: Vec<Result<Replication>> =
            pool.install(|| (start..end).into_par_iter().map(|r| run_replication(config, &env, r)).collect());
        for rep in reps {
            let rep = rep?;
            let mut row = Vec::with_capacity(names.len());
            for (acc, s) in accs.iter_mut().zip(&rep.series) {
                match s {
                    Some(xs) => {
                        acc.push(xs);
                        row.push(*xs.last().unwrap_or(&f64::NAN));
                    }
                    None => row.push(f64::NAN),
                }
            }
            finals.push(row);
            recommendations.extend(rep.recommendation);
        }
        start = end;
    }
    let columns: Vec<ColumnSummary> = names
        .iter()
        .zip(&accs)
        .map(|(name, acc)| ColumnSummary {
            name: name.to_string(),
            defined: acc.n,
            mean: acc.mean_or_nan(),
            sd: acc.sd(),
        })
        .collect();
    let specs: Vec<BoundSpec> = if config.bounds.is_empty() {
        BoundSpec::default_for(&config.policy).into_iter().collect()
    } else {
        config.bounds.clone()
    };
    let bound_checks = specs
        .into_iter()
        .map(|b| {
            let col = match b.metric(&env) {
                Metric::Weak => "weak",
                _ => "ee",
            };
            let observed = columns
                .iter()
                .find(|c| c.name == col)
                .and_then(|c| c.mean.last().copied())
                .filter(|v| v.is_finite());
            bounds::check(b, &env, config.horizon, observed)
        })
        .collect();
    Ok(ExperimentResult {
        config: config.clone(),
        columns,
        finals,
        recommendations,
        bounds: bound_checks,
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}

/// Arms chosen at each step of a discrete replication, for trajectory
/// comparisons.
pub fn trajectory(rep: &Replication) -> Vec<Vec<ArmId>> {
    regret::chosen_arms(&rep.log)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(policy: &str, reps: u32) -> ExperimentConfig {
        ExperimentConfig::from_toml(&format!(
            r#"
horizon = 300
replications = {reps}
seed = 11
metrics = ["ee", "ep", "suboptimal", "weak", "statistical"]
[policy]
{policy}
[environment]
kind = "stochastic"
arms = [{{ dist = "bernoulli", p = 0.9 }}, {{ dist = "bernoulli", p = 0.6 }}]
"#
        ))
        .unwrap()
    }

    #[test]
    fn workers_do_not_change_aggregates() {
        let cfg = config("name = \"thompson\"", 9);
        let a = run_experiment(&cfg, Some(1)).unwrap();
        let b = run_experiment(&cfg, Some(4)).unwrap();
        assert_eq!(a.columns, b.columns);
        assert_eq!(format!("{:?}", a.finals), format!("{:?}", b.finals));
    }

    #[test]
    fn replications_differ() {
        let cfg = config("name = \"thompson\"", 2);
        let env = cfg.validate().unwrap();
        let r0 = run_replication(&cfg, &env, 0).unwrap();
        let r1 = run_replication(&cfg, &env, 1).unwrap();
        assert_ne!(trajectory(&r0), trajectory(&r1));
    }

    #[test]
    fn ucb1_gets_a_bound_verdict() {
        let res = run_experiment(&config("name = \"ucb1\"", 4), None).unwrap();
        assert_eq!(res.bounds.len(), 1);
        assert_eq!(res.bounds[0].verdict, bounds::Verdict::Below);
        let ee = res.column("ee").unwrap();
        assert_eq!(ee.mean.len(), 300);
        assert!(ee.mean.windows(2).all(|w| w[1] >= w[0]));
    }
}
