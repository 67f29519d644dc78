//! Reward-generating environments and their oracles.
//!
//! An [`EnvironmentSpec`] is the serializable description read from an
//! experiment config; [`Environment`] is its validated, immutable runtime form.
//! All adversarial sequences are oblivious: fixed before play begins.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, BanditError, Result};
use crate::numeric::clamped_normal_mean;
use crate::rng::RngStream;
use crate::stats::ArmId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ArmDistribution {
    Bernoulli {
        p: f64,
    },
    Gaussian {
        mu: f64,
        sigma: f64,
        /// Rewards are clamped into `[low, high]` when present.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bounds: Option<[f64; 2]>,
    },
}

impl ArmDistribution {
    pub fn bernoulli(p: f64) -> Self {
        ArmDistribution::Bernoulli { p }
    }

    pub fn gaussian(mu: f64, sigma: f64) -> Self {
        ArmDistribution::Gaussian {
            mu,
            sigma,
            bounds: None,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            ArmDistribution::Bernoulli { p } => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(invalid("p", p, "Bernoulli parameter must lie in [0, 1]"));
                }
            }
            ArmDistribution::Gaussian { mu, sigma, bounds } => {
                if !mu.is_finite() {
                    return Err(invalid("mu", mu, "must be finite"));
                }
                if !(sigma >= 0.0 && sigma.is_finite()) {
                    return Err(invalid("sigma", sigma, "must be finite and >= 0"));
                }
                if let Some([lo, hi]) = bounds {
                    if !(lo < hi) {
                        return Err(invalid("bounds", lo, "low bound must be below high bound"));
                    }
                }
            }
        }
        Ok(())
    }

    /// The same family shifted by `delta` in its location parameter.
    /// Bernoulli parameters are clamped to `[0, 1]`.
    fn drifted(&self, delta: f64) -> Self {
        match *self {
            ArmDistribution::Bernoulli { p } => ArmDistribution::Bernoulli {
                p: (p + delta).clamp(0.0, 1.0),
            },
            ArmDistribution::Gaussian { mu, sigma, bounds } => ArmDistribution::Gaussian {
                mu: mu + delta,
                sigma,
                bounds,
            },
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ArmDistribution::Bernoulli { p } => p,
            ArmDistribution::Gaussian { mu, sigma, bounds } => match bounds {
                None => mu,
                Some([lo, hi]) => clamped_normal_mean(mu, sigma, lo, hi),
            },
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        match *self {
            ArmDistribution::Bernoulli { p } => {
                if rng.uniform() < p {
                    1.0
                } else {
                    0.0
                }
            }
            ArmDistribution::Gaussian { mu, sigma, bounds } => {
                let z: f64 = StandardNormal.sample(rng);
                let x = mu + sigma * z;
                match bounds {
                    None => x,
                    Some([lo, hi]) => x.clamp(lo, hi),
                }
            }
        }
    }

    pub fn bounds(&self) -> Option<(f64, f64)> {
        match *self {
            ArmDistribution::Bernoulli { .. } => Some((0.0, 1.0)),
            ArmDistribution::Gaussian { bounds, .. } => bounds.map(|[lo, hi]| (lo, hi)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    /// First step (1-based) at which these arms are active.
    pub start: u64,
    pub arms: Vec<ArmDistribution>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContextSampler {
    /// Uniform on the unit sphere in `d` dimensions.
    UnitSphere,
    /// Uniform on the unit sphere, folded into the positive orthant.
    PositiveSphere,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeanFunction {
    /// `height - slope * |x - peak|`.
    Triangle { peak: f64, height: f64, slope: f64 },
    /// `height - curvature * (x - peak)^2`.
    Quadratic { peak: f64, height: f64, curvature: f64 },
}

impl MeanFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            MeanFunction::Triangle {
                peak,
                height,
                slope,
            } => height - slope * (x - peak).abs(),
            MeanFunction::Quadratic {
                peak,
                height,
                curvature,
            } => height - curvature * (x - peak) * (x - peak),
        }
    }

    pub fn argmax(&self) -> f64 {
        match *self {
            MeanFunction::Triangle { peak, .. } | MeanFunction::Quadratic { peak, .. } => {
                peak.clamp(0.0, 1.0)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "noise", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ContinuumNoise {
    Bernoulli,
    Gaussian { sigma: f64 },
}

/// Serializable environment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EnvironmentSpec {
    Stochastic {
        arms: Vec<ArmDistribution>,
    },
    /// Piecewise-stationary arms with abrupt breakpoints.
    Switching {
        segments: Vec<Segment>,
    },
    /// Location parameters move linearly: `param(t) = base + slope * t`.
    Drifting {
        arms: Vec<ArmDistribution>,
        slopes: Vec<f64>,
    },
    /// An explicit `H x K` reward table.
    Adversarial {
        rewards: Vec<Vec<f64>>,
    },
    /// An oblivious table whose entries are Bernoulli draws fixed in advance
    /// from `seed`, so the arm with the largest mean is best over the horizon.
    AdversarialBernoulli {
        means: Vec<f64>,
        horizon: u64,
        seed: u64,
    },
    /// Reward of arm `i` under context `x` is `theta_i . x + noise`.
    ContextualLinear {
        theta: Vec<Vec<f64>>,
        noise_sigma: f64,
        context: ContextSampler,
    },
    Continuum {
        function: MeanFunction,
        noise: ContinuumNoise,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Stochastic(Vec<ArmDistribution>),
    Switching(Vec<Segment>),
    Drifting {
        arms: Vec<ArmDistribution>,
        slopes: Vec<f64>,
    },
    Adversarial(Vec<Vec<f64>>),
    Contextual {
        theta: Vec<Vec<f64>>,
        noise_sigma: f64,
        sampler: ContextSampler,
    },
    Continuum {
        function: MeanFunction,
        noise: ContinuumNoise,
    },
}

/// What an oracle would play at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleChoice {
    Arm(ArmId),
    Point(f64),
}

/// Validated runtime environment.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    kind: Kind,
}

impl EnvironmentSpec {
    pub fn build(&self) -> Result<Environment> {
        Environment::from_spec(self)
    }

    /// Short family name used in reports and validation messages.
    pub fn family(&self) -> &'static str {
        match self {
            EnvironmentSpec::Stochastic { .. } => "stochastic",
            EnvironmentSpec::Switching { .. } => "switching",
            EnvironmentSpec::Drifting { .. } => "drifting",
            EnvironmentSpec::Adversarial { .. } => "adversarial",
            EnvironmentSpec::AdversarialBernoulli { .. } => "adversarial-bernoulli",
            EnvironmentSpec::ContextualLinear { .. } => "contextual-linear",
            EnvironmentSpec::Continuum { .. } => "continuum",
        }
    }
}

fn same_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(BanditError::Dimension { expected, got })
    }
}

fn nonempty_arms(arms: &[ArmDistribution]) -> Result<()> {
    if arms.is_empty() {
        return Err(BanditError::Empty("environment arms"));
    }
    arms.iter().try_for_each(ArmDistribution::validate)
}

impl Environment {
    pub fn from_spec(spec: &EnvironmentSpec) -> Result<Self> {
        let kind = match spec {
            EnvironmentSpec::Stochastic { arms } => {
                nonempty_arms(arms)?;
                Kind::Stochastic(arms.clone())
            }
            EnvironmentSpec::Switching { segments } => {
                let first = segments.first().ok_or(BanditError::Empty("switching segments"))?;
                if first.start != 1 {
                    return Err(invalid("start", first.start as f64, "first segment must start at step 1"));
                }
                for w in segments.windows(2) {
                    if w[1].start <= w[0].start {
                        return Err(invalid(
                            "start",
                            w[1].start as f64,
                            "segment starts must be strictly increasing",
                        ));
                    }
                }
                for s in segments {
                    nonempty_arms(&s.arms)?;
                    same_len(first.arms.len(), s.arms.len())?;
                }
                Kind::Switching(segments.clone())
            }
            EnvironmentSpec::Drifting { arms, slopes } => {
                nonempty_arms(arms)?;
                same_len(arms.len(), slopes.len())?;
                Kind::Drifting {
                    arms: arms.clone(),
                    slopes: slopes.clone(),
                }
            }
            EnvironmentSpec::Adversarial { rewards } => {
                let k = rewards.first().map(Vec::len).ok_or(BanditError::Empty("reward matrix"))?;
                if k == 0 {
                    return Err(BanditError::Empty("reward matrix row"));
                }
                for row in rewards {
                    same_len(k, row.len())?;
                    for &r in row {
                        if !(0.0..=1.0).contains(&r) {
                            return Err(BanditError::RewardOutOfRange(r));
                        }
                    }
                }
                Kind::Adversarial(rewards.clone())
            }
            EnvironmentSpec::AdversarialBernoulli {
                means,
                horizon,
                seed,
            } => {
                if means.is_empty() {
                    return Err(BanditError::Empty("adversarial means"));
                }
                for &p in means {
                    ArmDistribution::bernoulli(p).validate()?;
                }
                let mut rng = RngStream::new(*seed, 0);
                let rewards = (0..*horizon)
                    .map(|_| {
                        means
                            .iter()
                            .map(|&p| ArmDistribution::bernoulli(p).sample(&mut rng))
                            .collect()
                    })
                    .collect();
                Kind::Adversarial(rewards)
            }
            EnvironmentSpec::ContextualLinear {
                theta,
                noise_sigma,
                context,
            } => {
                let d = theta.first().map(Vec::len).ok_or(BanditError::Empty("theta"))?;
                if d == 0 {
                    return Err(BanditError::Empty("theta row"));
                }
                for row in theta {
                    same_len(d, row.len())?;
                }
                if !(*noise_sigma >= 0.0) {
                    return Err(invalid("noise_sigma", *noise_sigma, "must be >= 0"));
                }
                Kind::Contextual {
                    theta: theta.clone(),
                    noise_sigma: *noise_sigma,
                    sampler: *context,
                }
            }
            EnvironmentSpec::Continuum { function, noise } => {
                for i in 0..=1000 {
                    let y = function.eval(i as f64 / 1000.0);
                    if !(0.0..=1.0).contains(&y) {
                        return Err(invalid("function", y, "mean function must map [0,1] into [0,1]"));
                    }
                }
                if let ContinuumNoise::Gaussian { sigma } = noise {
                    if !(*sigma >= 0.0) {
                        return Err(invalid("sigma", *sigma, "must be >= 0"));
                    }
                }
                Kind::Continuum {
                    function: *function,
                    noise: *noise,
                }
            }
        };
        Ok(Self { kind })
    }

    /// Number of discrete arms, `None` for continuum problems.
    pub fn num_arms(&self) -> Option<usize> {
        match &self.kind {
            Kind::Stochastic(a) => Some(a.len()),
            Kind::Switching(s) => Some(s[0].arms.len()),
            Kind::Drifting { arms, .. } => Some(arms.len()),
            Kind::Adversarial(m) => Some(m[0].len()),
            Kind::Contextual { theta, .. } => Some(theta.len()),
            Kind::Continuum { .. } => None,
        }
    }

    pub fn is_continuum(&self) -> bool {
        matches!(self.kind, Kind::Continuum { .. })
    }

    pub fn is_contextual(&self) -> bool {
        matches!(self.kind, Kind::Contextual { .. })
    }

    pub fn is_adversarial(&self) -> bool {
        matches!(self.kind, Kind::Adversarial(_))
    }

    /// True when every arm's distribution is the same at every step.
    pub fn is_stationary(&self) -> bool {
        match &self.kind {
            Kind::Stochastic(_) | Kind::Continuum { .. } => true,
            Kind::Switching(s) => s.len() == 1,
            Kind::Drifting { slopes, .. } => slopes.iter().all(|&s| s == 0.0),
            Kind::Adversarial(_) | Kind::Contextual { .. } => false,
        }
    }

    pub fn context_dim(&self) -> Option<usize> {
        match &self.kind {
            Kind::Contextual { theta, .. } => Some(theta[0].len()),
            _ => None,
        }
    }

    /// Finite-horizon limit of a reward table.
    pub fn horizon_limit(&self) -> Option<u64> {
        match &self.kind {
            Kind::Adversarial(m) => Some(m.len() as u64),
            _ => None,
        }
    }

    /// Range every reward is guaranteed to fall in, if bounded.
    pub fn reward_bounds(&self) -> Option<(f64, f64)> {
        fn union(arms: &[ArmDistribution]) -> Option<(f64, f64)> {
            arms.iter().try_fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), a| {
                a.bounds().map(|(l, h)| (lo.min(l), hi.max(h)))
            })
        }
        match &self.kind {
            Kind::Stochastic(arms) => union(arms),
            Kind::Switching(segs) => segs.iter().try_fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                union(&s.arms).map(|(l, h)| (lo.min(l), hi.max(h)))
            }),
            Kind::Drifting { arms, slopes } => {
                if arms.iter().zip(slopes).all(|(a, &s)| matches!(a, ArmDistribution::Bernoulli { .. }) || s == 0.0) {
                    union(arms)
                } else {
                    // Clamped Gaussians keep their bounds; unclamped drift is unbounded.
                    union(arms)
                }
            }
            Kind::Adversarial(_) => Some((0.0, 1.0)),
            Kind::Contextual { .. } => None,
            Kind::Continuum { noise, .. } => match noise {
                ContinuumNoise::Bernoulli => Some((0.0, 1.0)),
                ContinuumNoise::Gaussian { sigma } if *sigma == 0.0 => Some((0.0, 1.0)),
                ContinuumNoise::Gaussian { .. } => None,
            },
        }
    }

    fn check_arm(&self, arm: ArmId) -> Result<()> {
        let k = self.num_arms().ok_or_else(|| {
            BanditError::Unsupported("discrete arm requested from a continuum environment".into())
        })?;
        if arm.0 >= k {
            return Err(BanditError::ArmOutOfRange { arm: arm.0, arms: k });
        }
        Ok(())
    }

    fn check_step(&self, t: u64) -> Result<()> {
        if t == 0 {
            return Err(invalid("t", 0.0, "steps are 1-based"));
        }
        if let Some(h) = self.horizon_limit() {
            if t > h {
                return Err(BanditError::BeyondHorizon { step: t, horizon: h });
            }
        }
        Ok(())
    }

    /// Distribution of `arm` at step `t` for the distribution-based kinds.
    fn distribution(&self, arm: usize, t: u64) -> Option<ArmDistribution> {
        match &self.kind {
            Kind::Stochastic(arms) => Some(arms[arm].clone()),
            Kind::Switching(segs) => {
                let seg = segs.iter().rev().find(|s| s.start <= t).unwrap_or(&segs[0]);
                Some(seg.arms[arm].clone())
            }
            Kind::Drifting { arms, slopes } => Some(arms[arm].drifted(slopes[arm] * t as f64)),
            _ => None,
        }
    }

    /// Draw the world context for step `t` (contextual environments only).
    pub fn sample_context(&self, rng: &mut RngStream) -> Option<Vec<f64>> {
        let Kind::Contextual { theta, sampler, .. } = &self.kind else {
            return None;
        };
        let d = theta[0].len();
        loop {
            let mut x: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm < 1e-12 {
                continue;
            }
            for v in &mut x {
                *v /= norm;
                if *sampler == ContextSampler::PositiveSphere {
                    *v = v.abs();
                }
            }
            return Some(x);
        }
    }

    fn contextual_mean(theta: &[f64], context: Option<&[f64]>) -> Result<f64> {
        let x = context.ok_or_else(|| BanditError::Unsupported("contextual environment needs a context".into()))?;
        if x.len() != theta.len() {
            return Err(BanditError::Dimension {
                expected: theta.len(),
                got: x.len(),
            });
        }
        Ok(theta.iter().zip(x).map(|(a, b)| a * b).sum())
    }

    /// `E[x_{arm,t}]`, conditional on the context for contextual kinds.
    pub fn expected(&self, arm: ArmId, t: u64, context: Option<&[f64]>) -> Result<f64> {
        self.check_arm(arm)?;
        self.check_step(t)?;
        match &self.kind {
            Kind::Adversarial(m) => Ok(m[(t - 1) as usize][arm.0]),
            Kind::Contextual { theta, .. } => Self::contextual_mean(&theta[arm.0], context),
            _ => Ok(self.distribution(arm.0, t).expect("distribution kind").mean()),
        }
    }

    pub fn expected_point(&self, x: f64) -> Result<f64> {
        match &self.kind {
            Kind::Continuum { function, .. } => Ok(function.eval(x.clamp(0.0, 1.0))),
            _ => Err(BanditError::Unsupported("point requested from a discrete environment".into())),
        }
    }

    pub fn sample_reward(&self, arm: ArmId, t: u64, context: Option<&[f64]>, rng: &mut RngStream) -> Result<f64> {
        self.check_arm(arm)?;
        self.check_step(t)?;
        match &self.kind {
            Kind::Adversarial(m) => Ok(m[(t - 1) as usize][arm.0]),
            Kind::Contextual {
                theta, noise_sigma, ..
            } => {
                let mean = Self::contextual_mean(&theta[arm.0], context)?;
                let z: f64 = StandardNormal.sample(rng);
                Ok(mean + noise_sigma * z)
            }
            _ => Ok(self.distribution(arm.0, t).expect("distribution kind").sample(rng)),
        }
    }

    pub fn sample_point(&self, x: f64, rng: &mut RngStream) -> Result<f64> {
        let Kind::Continuum { function, noise } = &self.kind else {
            return Err(BanditError::Unsupported("point requested from a discrete environment".into()));
        };
        let mean = function.eval(x.clamp(0.0, 1.0));
        Ok(match noise {
            ContinuumNoise::Bernoulli => ArmDistribution::bernoulli(mean).sample(rng),
            ContinuumNoise::Gaussian { sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sigma * z
            }
        })
    }

    /// Expected rewards of all arms at step `t`.
    pub fn expected_all(&self, t: u64, context: Option<&[f64]>) -> Result<Vec<f64>> {
        let k = self
            .num_arms()
            .ok_or_else(|| BanditError::Unsupported("continuum environment has no arm list".into()))?;
        (0..k).map(|i| self.expected(ArmId(i), t, context)).collect()
    }

    /// The expectation-maximizing arm (lowest index on ties) or point.
    pub fn oracle_best(&self, t: u64, context: Option<&[f64]>) -> Result<(OracleChoice, f64)> {
        if let Kind::Continuum { function, .. } = &self.kind {
            let x = function.argmax();
            return Ok((OracleChoice::Point(x), function.eval(x)));
        }
        let means = self.expected_all(t, context)?;
        let (best, value) = means
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
        Ok((OracleChoice::Arm(ArmId(best)), value))
    }

    /// The `m` best arms at step `t` and the sum of their expectations.
    pub fn oracle_top_m(&self, t: u64, context: Option<&[f64]>, m: usize) -> Result<(Vec<ArmId>, f64)> {
        let means = self.expected_all(t, context)?;
        if m == 0 || m > means.len() {
            return Err(invalid("m", m as f64, "plays per step must be in 1..=K"));
        }
        let mut order: Vec<usize> = (0..means.len()).collect();
        order.sort_by(|&a, &b| means[b].total_cmp(&means[a]).then(a.cmp(&b)));
        order.truncate(m);
        let value = order.iter().map(|&i| means[i]).sum();
        Ok((order.into_iter().map(ArmId).collect(), value))
    }

    /// `mu* - mu_arm` at step `t`.
    pub fn gap(&self, arm: ArmId, t: u64, context: Option<&[f64]>) -> Result<f64> {
        let (_, best) = self.oracle_best(t, context)?;
        Ok((best - self.expected(arm, t, context)?).max(0.0))
    }

    /// Gaps of a stationary stochastic environment, `None` otherwise.
    pub fn stationary_gaps(&self) -> Option<Vec<f64>> {
        if !self.is_stationary() || self.is_continuum() {
            return None;
        }
        let k = self.num_arms()?;
        (0..k).map(|i| self.gap(ArmId(i), 1, None).ok()).collect()
    }
}
