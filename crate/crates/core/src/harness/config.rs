//! Experiment configuration (TOML) and the policy catalog.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::bounds::BoundSpec;
use super::HarnessError;
use crate::env::{Environment, EnvironmentSpec};
use crate::error::Result;
use crate::policies::adversarial::{Exp3, Exp4, Expert, Sao};
use crate::policies::contextual::{DecayKind, FeatureMap, LinTs, LinUcb, WlsDecay};
use crate::policies::extended::{Hoo, MultiPlayTs};
use crate::policies::nonstationary::{AdaptEvE, DiscountedUcb, Exp3R, KalmanBandit, KalmanSelection, SlidingWindowUcb};
use crate::policies::sampling::{Besa, Poker, PriorSpec, ThompsonSampling};
use crate::policies::semiuniform::{EpochWrapper, EpsilonFirst, EpsilonGreedy, EpsilonSchedule, PolicyFactory};
use crate::policies::ucb::{BayesPrior, BayesUcb, KlUcb, Moss, Ucb1, Ucb2, UcbTuned};
use crate::policies::RewardScale;
use crate::policy::{ContinuumPolicy, Policy};
use crate::regret::IntervalMethod;

fn d_one() -> f64 {
    1.0
}
fn d_half() -> f64 {
    0.5
}
fn d_alpha() -> f64 {
    0.1
}
fn d_gamma() -> f64 {
    0.1
}
fn d_ph_delta() -> f64 {
    0.005
}
fn d_ph_lambda() -> f64 {
    50.0
}
fn d_period() -> u64 {
    200
}
fn d_interval() -> u64 {
    100
}
fn d_margin() -> f64 {
    0.05
}
fn d_depth() -> u32 {
    40
}
fn d_time_unit() -> u64 {
    1
}

/// A policy and its parameters, tagged by `name`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PolicySpec {
    /// Constant exploration rate.
    EpsilonGreedy { epsilon: f64 },
    /// `min(1, epsilon0 / t)`.
    EpsilonDecreasing { epsilon0: f64 },
    GreedyMix { d: f64 },
    EpsilonNGreedy { c: f64, d: f64 },
    EpsilonFirst { epsilon0: f64 },
    /// Restart `inner` every `epoch_length` steps.
    Epoch { epoch_length: u64, inner: Box<PolicySpec> },
    Ucb1 {},
    Ucb2 {
        #[serde(default = "d_alpha")]
        alpha: f64,
    },
    UcbTuned {},
    Moss {},
    KlUcb {
        #[serde(default)]
        c: f64,
    },
    BayesUcb {
        #[serde(default)]
        prior: BayesPrior,
    },
    Thompson {
        #[serde(default)]
        prior: PriorSpec,
    },
    OptimisticThompson {
        #[serde(default)]
        prior: PriorSpec,
    },
    /// `horizon` defaults to the experiment horizon.
    Poker {
        #[serde(default)]
        horizon: Option<u64>,
    },
    Besa {},
    Exp3 {
        #[serde(default = "d_gamma")]
        gamma: f64,
    },
    /// Exp4, or Exp4.P when `delta` is given. No experts means one
    /// point-mass expert per arm.
    Exp4 {
        #[serde(default = "d_gamma")]
        gamma: f64,
        #[serde(default)]
        experts: Vec<Expert>,
        #[serde(default)]
        delta: Option<f64>,
    },
    Sao {
        #[serde(default)]
        c: Option<f64>,
        #[serde(default = "d_gamma")]
        gamma: f64,
    },
    #[serde(rename = "linucb")]
    LinUcb {
        alpha: f64,
        #[serde(default = "d_one")]
        lambda: f64,
        #[serde(default)]
        features: FeatureMap,
    },
    #[serde(rename = "lints")]
    LinTs {
        #[serde(default = "d_one")]
        lambda: f64,
        #[serde(default)]
        features: FeatureMap,
    },
    WlsDecay {
        alpha: f64,
        decay: DecayKind,
        #[serde(default = "d_one")]
        lambda: f64,
        #[serde(default = "d_time_unit")]
        time_unit: u64,
        #[serde(default)]
        features: FeatureMap,
    },
    DUcb {
        gamma: f64,
        #[serde(default = "d_one")]
        b: f64,
        #[serde(default = "d_half")]
        xi: f64,
        #[serde(default)]
        tuned: bool,
    },
    /// `tau` absent means an unbounded window.
    SwUcb {
        #[serde(default)]
        tau: Option<usize>,
        #[serde(default = "d_one")]
        b: f64,
        #[serde(default = "d_half")]
        xi: f64,
        #[serde(default)]
        tuned: bool,
    },
    AdaptEve {
        #[serde(default = "d_ph_delta")]
        delta: f64,
        #[serde(default = "d_ph_lambda")]
        lambda: f64,
        #[serde(default = "d_period")]
        period: u64,
    },
    Exp3r {
        #[serde(default = "d_gamma")]
        gamma: f64,
        #[serde(default = "d_interval")]
        interval: u64,
        #[serde(default = "d_margin")]
        margin: f64,
    },
    Kalman {
        obs_var: f64,
        tr_var: f64,
        #[serde(default)]
        selection: KalmanSelection,
        /// Prior range; defaults to the environment's reward bounds.
        #[serde(default)]
        bounds: Option<[f64; 2]>,
    },
    Hoo {
        #[serde(default = "d_half")]
        rho: f64,
        #[serde(default = "d_one")]
        v1: f64,
        #[serde(default = "d_depth")]
        max_depth: u32,
    },
    MpTs {
        m: usize,
        #[serde(default)]
        prior: PriorSpec,
    },
    ImpTs {
        m: usize,
        #[serde(default)]
        prior: PriorSpec,
    },
}

/// `(config name, family, summary)` for every policy.
pub const CATALOG: &[(&str, &str, &str)] = &[
    ("epsilon-greedy", "semi-uniform", "constant exploration rate"),
    ("epsilon-decreasing", "semi-uniform", "epsilon0 / t exploration"),
    ("greedy-mix", "semi-uniform", "logarithmically decreasing exploration"),
    ("epsilon-n-greedy", "semi-uniform", "cK / (d^2 t) exploration"),
    ("epsilon-first", "semi-uniform", "explore for epsilon0 * H steps, then commit"),
    ("epoch", "semi-uniform", "restart an inner policy every epoch"),
    ("ucb1", "ucb", "mean + sqrt(2 ln t / n)"),
    ("ucb2", "ucb", "epoch-based UCB"),
    ("ucb-tuned", "ucb", "variance-aware UCB"),
    ("moss", "ucb", "horizon-aware UCB"),
    ("kl-ucb", "ucb", "Bernoulli KL upper confidence"),
    ("bayes-ucb", "ucb", "posterior quantile index"),
    ("thompson", "sampling", "posterior sampling"),
    ("optimistic-thompson", "sampling", "posterior sampling floored at the mean"),
    ("poker", "sampling", "price of knowledge and estimated reward"),
    ("besa", "sampling", "best empirical sampled average"),
    ("exp3", "adversarial", "exponential weights with uniform exploration"),
    ("exp4", "adversarial", "exponential weights over expert advice (Exp4.P with delta)"),
    ("sao", "adversarial", "stochastic-and-adversarial-optimal, two arms"),
    ("linucb", "contextual", "ridge regression UCB"),
    ("lints", "contextual", "ridge regression Thompson sampling"),
    ("wls-decay", "contextual", "weighted least squares with decaying weights"),
    ("d-ucb", "nonstationary", "discounted UCB"),
    ("sw-ucb", "nonstationary", "sliding-window UCB"),
    ("adapt-eve", "nonstationary", "Page-Hinkley detector with a meta-bandit"),
    ("exp3r", "nonstationary", "Exp3 with drift-triggered resets"),
    ("kalman", "nonstationary", "Kalman-filter posterior per arm"),
    ("hoo", "continuum", "hierarchical optimistic optimization on [0, 1]"),
    ("mp-ts", "multi-play", "Thompson sampling, top m draws"),
    ("imp-ts", "multi-play", "m - 1 empirical leaders plus one Thompson draw"),
];

/// A built policy.
pub enum Agent {
    Discrete(Box<dyn Policy>),
    Continuum(Box<dyn ContinuumPolicy>),
}

impl Agent {
    pub fn name(&self) -> &'static str {
        match self {
            Agent::Discrete(p) => p.name(),
            Agent::Continuum(p) => p.name(),
        }
    }
}

fn config_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

impl PolicySpec {
    /// The config `name` of this policy.
    pub fn name(&self) -> &'static str {
        let v = serde_json::to_value(self).expect("policy specs serialize");
        let name = v["name"].as_str().expect("tagged").to_string();
        CATALOG
            .iter()
            .find(|(n, _, _)| *n == name)
            .map(|(n, _, _)| *n)
            .expect("every variant is in the catalog")
    }

    fn is_contextual(&self) -> bool {
        matches!(self, PolicySpec::LinUcb { .. } | PolicySpec::LinTs { .. } | PolicySpec::WlsDecay { .. })
    }

    /// Plays per step.
    pub fn plays(&self) -> usize {
        match self {
            PolicySpec::MpTs { m, .. } | PolicySpec::ImpTs { m, .. } => *m,
            PolicySpec::Epoch { inner, .. } => inner.plays(),
            _ => 1,
        }
    }

    fn needs_unit_rewards(&self) -> bool {
        match self {
            PolicySpec::KlUcb { .. } => true,
            PolicySpec::BayesUcb { prior } => matches!(prior, BayesPrior::Beta { .. }),
            PolicySpec::Thompson { prior }
            | PolicySpec::OptimisticThompson { prior }
            | PolicySpec::MpTs { prior, .. }
            | PolicySpec::ImpTs { prior, .. } => matches!(prior, PriorSpec::Beta { .. }),
            PolicySpec::Epoch { inner, .. } => inner.needs_unit_rewards(),
            _ => false,
        }
    }

    /// Reject pairings that cannot run, naming both sides.
    pub fn check_compatible(&self, env: &Environment, env_spec: &EnvironmentSpec) -> std::result::Result<(), HarnessError> {
        let pair = || format!("policy `{}` with environment `{}`", self.name(), env_spec.family());
        let is_hoo = matches!(self, PolicySpec::Hoo { .. });
        if env.is_continuum() != is_hoo {
            return Err(config_err(format!(
                "{}: continuum environments need a continuum policy and vice versa",
                pair()
            )));
        }
        if self.is_contextual() && !env.is_contextual() {
            return Err(config_err(format!("{}: contextual policy needs a contextual environment", pair())));
        }
        if let PolicySpec::Exp4 { experts, .. } = self {
            if experts.iter().any(|e| matches!(e, Expert::ContextSoftmax { .. }))
                && env.context_dim() != env.num_arms()
            {
                return Err(config_err(format!(
                    "{}: context-softmax experts need a context with one entry per arm",
                    pair()
                )));
            }
        }
        if let Some(k) = env.num_arms() {
            if self.plays() > k {
                return Err(config_err(format!("{}: m = {} exceeds K = {k}", pair(), self.plays())));
            }
            if matches!(self, PolicySpec::Sao { .. }) && k != 2 {
                return Err(config_err(format!("{}: SAO is defined for two arms", pair())));
            }
        }
        if self.needs_unit_rewards() {
            match env.reward_bounds() {
                Some((lo, hi)) if lo >= 0.0 && hi <= 1.0 => {}
                _ => {
                    return Err(config_err(format!(
                        "{}: Beta/Bernoulli models need rewards in [0, 1]",
                        pair()
                    )))
                }
            }
        }
        if let PolicySpec::Epoch { inner, .. } = self {
            inner.check_compatible(env, env_spec)?;
        }
        Ok(())
    }

    /// Build a fresh instance for an experiment of length `horizon`.
    pub fn build(&self, env: &Environment, horizon: u64) -> Result<Agent> {
        let k = || {
            env.num_arms()
                .ok_or_else(|| crate::error::BanditError::Unsupported("policy needs discrete arms".into()))
        };
        let scale = || -> Result<RewardScale> {
            match env.reward_bounds() {
                Some((lo, hi)) if lo >= 0.0 && hi <= 1.0 => Ok(RewardScale::default()),
                Some((lo, hi)) => RewardScale::new(lo, hi),
                None => Err(crate::error::BanditError::Unsupported(
                    "exponential-weights policies need bounded rewards".into(),
                )),
            }
        };
        let d = || env.context_dim().unwrap_or(1);
        let boxed = |p: Box<dyn Policy>| Ok(Agent::Discrete(p));
        match self {
            PolicySpec::EpsilonGreedy { epsilon } => {
                boxed(Box::new(EpsilonGreedy::new(k()?, EpsilonSchedule::Constant { epsilon: *epsilon })?))
            }
            PolicySpec::EpsilonDecreasing { epsilon0 } => {
                boxed(Box::new(EpsilonGreedy::new(k()?, EpsilonSchedule::Vermorel { epsilon0: *epsilon0 })?))
            }
            PolicySpec::GreedyMix { d } => boxed(Box::new(EpsilonGreedy::new(
                k()?,
                EpsilonSchedule::GreedyMix { d: *d, arms: k()? },
            )?)),
            PolicySpec::EpsilonNGreedy { c, d } => boxed(Box::new(EpsilonGreedy::new(
                k()?,
                EpsilonSchedule::EpsilonN {
                    c: *c,
                    d: *d,
                    arms: k()?,
                },
            )?)),
            PolicySpec::EpsilonFirst { epsilon0 } => boxed(Box::new(EpsilonFirst::new(k()?, *epsilon0, horizon)?)),
            PolicySpec::Epoch { epoch_length, inner } => {
                let inner = (**inner).clone();
                let env = env.clone();
                let factory: PolicyFactory = Box::new(move |len| match inner.build(&env, len)? {
                    Agent::Discrete(p) => Ok(p),
                    Agent::Continuum(_) => Err(crate::error::BanditError::Unsupported(
                        "epochs need a discrete inner policy".into(),
                    )),
                });
                boxed(Box::new(EpochWrapper::new(factory, *epoch_length)?))
            }
            PolicySpec::Ucb1 {} => boxed(Box::new(Ucb1::new(k()?)?)),
            PolicySpec::Ucb2 { alpha } => boxed(Box::new(Ucb2::new(k()?, *alpha)?)),
            PolicySpec::UcbTuned {} => boxed(Box::new(UcbTuned::new(k()?)?)),
            PolicySpec::Moss {} => boxed(Box::new(Moss::new(k()?, horizon)?)),
            PolicySpec::KlUcb { c } => boxed(Box::new(KlUcb::new(k()?, *c)?)),
            PolicySpec::BayesUcb { prior } => boxed(Box::new(BayesUcb::new(k()?, *prior)?)),
            PolicySpec::Thompson { prior } => boxed(Box::new(ThompsonSampling::new(k()?, *prior)?)),
            PolicySpec::OptimisticThompson { prior } => boxed(Box::new(ThompsonSampling::optimistic(k()?, *prior)?)),
            PolicySpec::Poker { horizon: h } => boxed(Box::new(Poker::new(k()?, h.unwrap_or(horizon))?)),
            PolicySpec::Besa {} => boxed(Box::new(Besa::new(k()?)?)),
            PolicySpec::Exp3 { gamma } => boxed(Box::new(Exp3::new(k()?, *gamma, scale()?)?)),
            PolicySpec::Exp4 { gamma, experts, delta } => {
                let experts = if experts.is_empty() {
                    Expert::point_masses(k()?)
                } else {
                    experts.clone()
                };
                let p = Exp4::new(k()?, experts, *gamma, scale()?)?;
                match delta {
                    Some(delta) => boxed(Box::new(p.with_confidence(*delta, horizon)?)),
                    None => boxed(Box::new(p)),
                }
            }
            PolicySpec::Sao { c, gamma } => boxed(Box::new(Sao::new(k()?, horizon, *c, *gamma, scale()?)?)),
            PolicySpec::LinUcb { alpha, lambda, features } => {
                boxed(Box::new(LinUcb::new(k()?, d(), *alpha, *lambda, *features)?))
            }
            PolicySpec::LinTs { lambda, features } => boxed(Box::new(LinTs::new(k()?, d(), *lambda, *features)?)),
            PolicySpec::WlsDecay {
                alpha,
                decay,
                lambda,
                time_unit,
                features,
            } => boxed(Box::new(WlsDecay::new(
                k()?,
                d(),
                *lambda,
                *alpha,
                *decay,
                *time_unit,
                *features,
            )?)),
            PolicySpec::DUcb { gamma, b, xi, tuned } => {
                boxed(Box::new(DiscountedUcb::new(k()?, *gamma, *b, *xi, *tuned)?))
            }
            PolicySpec::SwUcb { tau, b, xi, tuned } => {
                boxed(Box::new(SlidingWindowUcb::new(k()?, *tau, *b, *xi, *tuned)?))
            }
            PolicySpec::AdaptEve { delta, lambda, period } => {
                boxed(Box::new(AdaptEvE::with_ucb_tuned(k()?, *delta, *lambda, *period)?))
            }
            PolicySpec::Exp3r { gamma, interval, margin } => {
                boxed(Box::new(Exp3R::new(k()?, *gamma, *interval, *margin, scale()?)?))
            }
            PolicySpec::Kalman {
                obs_var,
                tr_var,
                selection,
                bounds,
            } => {
                let range = match bounds {
                    Some([lo, hi]) => (*lo, *hi),
                    None => env.reward_bounds().ok_or_else(|| {
                        crate::error::BanditError::Unsupported(
                            "kalman needs `bounds` when rewards are unbounded".into(),
                        )
                    })?,
                };
                boxed(Box::new(KalmanBandit::new(k()?, *obs_var, *tr_var, range, *selection)?))
            }
            PolicySpec::Hoo { rho, v1, max_depth } => Ok(Agent::Continuum(Box::new(Hoo::new(*rho, *v1, *max_depth)?))),
            PolicySpec::MpTs { m, prior } => boxed(Box::new(MultiPlayTs::new(k()?, *m, *prior, false)?)),
            PolicySpec::ImpTs { m, prior } => boxed(Box::new(MultiPlayTs::new(k()?, *m, *prior, true)?)),
        }
    }
}

/// Regret measures that can be recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    /// Expected-expected regret.
    Ee,
    /// Expected-payoff regret.
    Ep,
    Suboptimal,
    Weak,
    /// Statistical regret; contributes `stat_lo` and `stat_hi` columns.
    Statistical,
}

impl Metric {
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Metric::Ee => &["ee"],
            Metric::Ep => &["ep"],
            Metric::Suboptimal => &["suboptimal"],
            Metric::Weak => &["weak"],
            Metric::Statistical => &["stat_lo", "stat_hi"],
        }
    }
}

fn default_metrics() -> Vec<Metric> {
    vec![Metric::Ee, Metric::Ep, Metric::Suboptimal]
}

fn d_replications() -> u32 {
    1
}

fn d_level() -> f64 {
    0.9
}

fn d_resamples() -> usize {
    1000
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntervalKind {
    Parametric,
    #[default]
    Bootstrap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatisticalConfig {
    #[serde(default = "d_level")]
    pub level: f64,
    #[serde(default)]
    pub method: IntervalKind,
    /// Bootstrap resamples.
    #[serde(default = "d_resamples")]
    pub resamples: usize,
}

impl StatisticalConfig {
    pub fn interval_method(&self) -> IntervalMethod {
        match self.method {
            IntervalKind::Parametric => IntervalMethod::Parametric,
            IntervalKind::Bootstrap => IntervalMethod::Bootstrap {
                resamples: self.resamples,
            },
        }
    }
}

impl Default for StatisticalConfig {
    fn default() -> Self {
        Self {
            level: d_level(),
            method: IntervalKind::default(),
            resamples: d_resamples(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub horizon: u64,
    #[serde(default = "d_replications")]
    pub replications: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<Metric>,
    #[serde(default)]
    pub statistical: StatisticalConfig,
    /// Bounds to check; when empty, the policy's own bound (if any) is used.
    #[serde(default)]
    pub bounds: Vec<BoundSpec>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub policy: PolicySpec,
    pub environment: EnvironmentSpec,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> std::result::Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    pub fn load(path: &Path) -> std::result::Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialize to TOML")
    }

    /// Column names in output order.
    pub fn columns(&self) -> Vec<&'static str> {
        let mut metrics = self.metrics.clone();
        metrics.sort();
        metrics.dedup();
        metrics.iter().flat_map(|m| m.columns().iter().copied()).collect()
    }

    /// Check every invariant that can be checked before running and return
    /// the built environment.
    pub fn validate(&self) -> std::result::Result<Environment, HarnessError> {
        if self.horizon == 0 {
            return Err(config_err("horizon must be >= 1"));
        }
        if self.replications == 0 {
            return Err(config_err("replications must be >= 1"));
        }
        if self.metrics.is_empty() {
            return Err(config_err("select at least one metric"));
        }
        let env = self
            .environment
            .build()
            .map_err(|e| config_err(format!("environment `{}`: {e}", self.environment.family())))?;
        if let Some(limit) = env.horizon_limit() {
            if self.horizon > limit {
                return Err(config_err(format!(
                    "horizon {} exceeds the {limit} rows of the reward table",
                    self.horizon
                )));
            }
        }
        if self.metrics.contains(&Metric::Statistical) {
            if env.is_continuum() {
                return Err(config_err("statistical regret needs discrete arms"));
            }
            if !(0.0..1.0).contains(&self.statistical.level) {
                return Err(config_err("statistical.level must lie in [0, 1)"));
            }
            if let IntervalMethod::Bootstrap { resamples: 0 } = self.statistical.interval_method() {
                return Err(config_err("statistical.resamples must be >= 1"));
            }
        }
        self.policy.check_compatible(&env, &self.environment)?;
        self.policy
            .build(&env, self.horizon)
            .map_err(|e| config_err(format!("policy `{}`: {e}", self.policy.name())))?;
        for b in &self.bounds {
            b.validate().map_err(config_err)?;
        }
        Ok(env)
    }
}
