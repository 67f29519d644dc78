//! Exponential-weights policies for oblivious adversaries (Exp3, Exp4,
//! Exp4.P) and the stochastic/adversarial hybrid SAO.
//!
//! Rewards are mapped to `[0, 1]` through a [`RewardScale`] before any weight
//! update; a reward outside the declared range is an error.

use serde::{Deserialize, Serialize};

use super::{check_arms, inverse_cdf, single_observation, RewardScale};
use crate::error::{invalid, BanditError, Result};
use crate::log::PolicyDecision;
use crate::policy::{Policy, StepContext};
use crate::rng::RngStream;
use crate::stats::{ArmId, ArmStats};

/// Weights are renormalized once the largest exceeds this.
pub const WEIGHT_GUARD: f64 = 1e150;
const WEIGHT_FLOOR: f64 = 1e-300;

fn check_gamma(gamma: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&gamma) {
        Ok(gamma)
    } else {
        Err(invalid("gamma", gamma, "must lie in [0, 1]"))
    }
}

/// Divide by the largest weight when it passes [`WEIGHT_GUARD`]. Probabilities
/// depend only on weight ratios, so this leaves them unchanged.
pub fn renormalize(weights: &mut [f64]) {
    let max = weights.iter().cloned().fold(0.0, f64::max);
    if max > WEIGHT_GUARD {
        for w in weights.iter_mut() {
            *w = (*w / max).max(WEIGHT_FLOOR);
        }
    }
}

/// `p_i = (1 - gamma) w_i / sum w + gamma / K`.
pub fn exp3_probs(weights: &[f64], gamma: f64) -> Vec<f64> {
    let k = weights.len() as f64;
    let total: f64 = weights.iter().sum();
    weights.iter().map(|w| (1.0 - gamma) * w / total + gamma / k).collect()
}

/// `w_arm *= exp(gamma rho / (p K))`, other weights unchanged.
pub fn exp3_update(weights: &mut [f64], arm: usize, reward: f64, p: f64, gamma: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&reward) {
        return Err(BanditError::RewardOutOfRange(reward));
    }
    if !(p > 0.0) {
        return Err(invalid("p", p, "played probability must be > 0"));
    }
    let k = weights.len() as f64;
    weights[arm] *= (gamma * reward / (p * k)).exp();
    renormalize(weights);
    Ok(())
}

/// Draw from the Exp3 mixture with a single uniform. Values below `gamma`
/// select the uniform component (a γ-observation); the rest are mapped onto
/// the weight distribution, so `P(i) = gamma/K + (1-gamma) w_i / sum w`.
pub fn exp3_draw(weights: &[f64], gamma: f64, rng: &mut RngStream) -> (ArmId, bool) {
    let k = weights.len();
    let u = rng.uniform();
    if u < gamma {
        let i = ((u / gamma) * k as f64) as usize;
        (ArmId(i.min(k - 1)), true)
    } else {
        let v = (u - gamma) / (1.0 - gamma);
        let total: f64 = weights.iter().sum();
        let p: Vec<f64> = weights.iter().map(|w| w / total).collect();
        (ArmId(inverse_cdf(&p, v)), false)
    }
}

/// The weight vector and exploration rate shared by Exp3 and Exp3.R.
#[derive(Debug, Clone)]
pub struct Exp3State {
    pub weights: Vec<f64>,
    pub gamma: f64,
}

impl Exp3State {
    pub fn new(arms: usize, gamma: f64) -> Result<Self> {
        Ok(Self {
            weights: vec![1.0; check_arms(arms)?],
            gamma: check_gamma(gamma)?,
        })
    }

    pub fn probs(&self) -> Vec<f64> {
        exp3_probs(&self.weights, self.gamma)
    }

    pub fn reset(&mut self) {
        self.weights.fill(1.0);
    }
}

#[derive(Debug, Clone)]
pub struct Exp3 {
    state: Exp3State,
    scale: RewardScale,
    last: Option<(ArmId, f64, bool)>,
}

impl Exp3 {
    pub fn new(arms: usize, gamma: f64, scale: RewardScale) -> Result<Self> {
        Ok(Self {
            state: Exp3State::new(arms, gamma)?,
            scale,
            last: None,
        })
    }

    pub fn state(&self) -> &Exp3State {
        &self.state
    }

    pub(crate) fn state_mut(&mut self) -> &mut Exp3State {
        &mut self.state
    }

    /// Whether the last selection came from the uniform component.
    pub fn last_was_uniform(&self) -> bool {
        self.last.is_some_and(|l| l.2)
    }

    /// Scaled reward of the last observation.
    pub(crate) fn scaled(&self, r: f64) -> Result<f64> {
        self.scale.apply(r)
    }
}

impl Policy for Exp3 {
    fn name(&self) -> &'static str {
        "exp3"
    }

    fn num_arms(&self) -> usize {
        self.state.weights.len()
    }

    fn select(&mut self, _: &StepContext<'_>, rng: &mut RngStream) -> Result<PolicyDecision> {
        let probs = self.state.probs();
        let (arm, uniform) = exp3_draw(&self.state.weights, self.state.gamma, rng);
        self.last = Some((arm, probs[arm.0], uniform));
        Ok(PolicyDecision::with_scores(arm, probs))
    }

    fn observe(&mut self, _: &StepContext<'_>, arms: &[ArmId], rewards: &[f64]) -> Result<()> {
        let (i, r) = single_observation(arms, rewards, self.num_arms())?;
        let (arm, p, _) = self
            .last
            .filter(|l| l.0 .0 == i)
            .ok_or_else(|| BanditError::Unsupported("observe without a matching select".into()))?;
        let rho = self.scale.apply(r)?;
        exp3_update(&mut self.state.weights, arm.0, rho, p, self.state.gamma)
    }
}

/// A named advice generator for Exp4 / Exp4.P.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Expert {
    Uniform,
    /// All mass on one arm.
    PointMass { arm: usize },
    /// A fixed probability row.
    Constant { row: Vec<f64> },
    /// `softmax(context / temperature)`; the context must have one entry per arm.
    ContextSoftmax { temperature: f64 },
}

impl Expert {
    /// Every point-mass expert for `K` arms.
    pub fn point_masses(arms: usize) -> Vec<Expert> {
        (0..arms).map(|arm| Expert::PointMass { arm }).collect()
    }

    pub fn validate(&self, arms: usize) -> Result<()> {
        match self {
            Expert::Uniform => Ok(()),
            Expert::PointMass { arm } => {
                if *arm < arms {
                    Ok(())
                } else {
                    Err(BanditError::ArmOutOfRange { arm: *arm, arms })
                }
            }
            Expert::Constant { row } => {
                if row.len() != arms {
                    return Err(BanditError::Dimension {
                        expected: arms,
                        got: row.len(),
                    });
                }
                let total: f64 = row.iter().sum();
                if row.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-9 {
                    return Err(invalid("row", total, "advice must be a probability vector"));
                }
                Ok(())
            }
            Expert::ContextSoftmax { temperature } => {
                if *temperature > 0.0 {
                    Ok(())
                } else {
                    Err(invalid("temperature", *temperature, "must be > 0"))
                }
            }
        }
    }

    pub fn advice(&self, arms: usize, context: Option<&[f64]>) -> Result<Vec<f64>> {
        Ok(match self {
            Expert::Uniform => vec![1.0 / arms as f64; arms],
            Expert::PointMass { arm } => {
                let mut row = vec![0.0; arms];
                row[*arm] = 1.0;
                row
            }
            Expert::Constant { row } => row.clone(),
            Expert::ContextSoftmax { temperature } => {
                let x = context.ok_or_else(|| BanditError::Unsupported("context-softmax expert needs a context".into()))?;
                if x.len() != arms {
                    return Err(BanditError::Dimension {
                        expected: arms,
                        got: x.len(),
                    });
                }
                let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let e: Vec<f64> = x.iter().map(|v| ((v - m) / temperature).exp()).collect();
                let z: f64 = e.iter().sum();
                e.into_iter().map(|v| v / z).collect()
            }
        })
    }
}

/// `p_i = (1 - gamma) sum_j w_j xi_j(i) / sum_j w_j + gamma / K`.
pub fn exp4_probs(weights: &[f64], advice: &[Vec<f64>], gamma: f64) -> Vec<f64> {
    let k = advice[0].len();
    let total: f64 = weights.iter().sum();
    (0..k)
        .map(|i| {
            let mix: f64 = weights.iter().zip(advice).map(|(w, row)| w * row[i]).sum();
            (1.0 - gamma) * mix / total + gamma / k as f64
        })
        .collect()
}

/// Importance-weighted expert payoff `xi_j(played) rho / p_played`.
pub fn exp4_payoffs(advice: &[Vec<f64>], played: usize, reward: f64, p: f64) -> Vec<f64> {
    advice.iter().map(|row| row[played] * reward / p).collect()
}

/// `w_j *= exp(gamma y_j / K)`.
pub fn exp4_update(weights: &mut [f64], advice: &[Vec<f64>], played: usize, reward: f64, probs: &[f64], gamma: f64) {
    let k = probs.len() as f64;
    for (w, y) in weights.iter_mut().zip(exp4_payoffs(advice, played, reward, probs[played])) {
        *w *= (gamma * y / k).exp();
    }
    renormalize(weights);
}

/// Exp4.P confidence parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exp4pParams {
    pub delta: f64,
    pub horizon: u64,
}

/// `w_j *= exp((gamma/2)(y_j + v_j sqrt(ln(N/delta) / (K H))))` with
/// `v_j = sum_i xi_j(i) / p_i`.
pub fn exp4p_update(
    weights: &mut [f64],
    advice: &[Vec<f64>],
    played: usize,
    reward: f64,
    probs: &[f64],
    gamma: f64,
    params: Exp4pParams,
) {
    let k = probs.len() as f64;
    let n = weights.len() as f64;
    let width = ((n / params.delta).ln() / (k * params.horizon as f64)).sqrt();
    let payoffs = exp4_payoffs(advice, played, reward, probs[played]);
    for ((w, y), row) in weights.iter_mut().zip(payoffs).zip(advice) {
        let v: f64 = row.iter().zip(probs).map(|(xi, p)| xi / p).sum();
        *w *= (gamma / 2.0 * (y + v * width)).exp();
    }
    renormalize(weights);
}

/// Exp4, or Exp4.P when confidence parameters are given.
#[derive(Debug, Clone)]
pub struct Exp4 {
    arms: usize,
    experts: Vec<Expert>,
    weights: Vec<f64>,
    gamma: f64,
    exp4p: Option<Exp4pParams>,
    scale: RewardScale,
    last: Option<(ArmId, Vec<Vec<f64>>, Vec<f64>)>,
}

impl Exp4 {
    pub fn new(arms: usize, experts: Vec<Expert>, gamma: f64, scale: RewardScale) -> Result<Self> {
        check_arms(arms)?;
        if experts.is_empty() {
            return Err(BanditError::Empty("experts"));
        }
        for e in &experts {
            e.validate(arms)?;
        }
        Ok(Self {
            arms,
            weights: vec![1.0; experts.len()],
            experts,
            gamma: check_gamma(gamma)?,
            exp4p: None,
            scale,
            last: None,
        })
    }

    pub fn with_confidence(mut self, delta: f64, horizon: u64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid("delta", delta, "must lie in (0, 1)"));
        }
        if horizon == 0 {
            return Err(invalid("horizon", 0.0, "must be >= 1"));
        }
        self.exp4p = Some(Exp4pParams { delta, horizon });
        Ok(self)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl Policy for Exp4 {
    fn name(&self) -> &'static str {
        if self.exp4p.is_some() {
            "exp4p"
        } else {
            "exp4"
        }
    }

    fn num_arms(&self) -> usize {
        self.arms
    }

    fn select(&mut self, step: &StepContext<'_>, rng: &mut RngStream) -> Result<PolicyDecision> {
        let advice = self
            .experts
            .iter()
            .map(|e| e.advice(self.arms, step.context))
            .collect::<Result<Vec<_>>>()?;
        let probs = exp4_probs(&self.weights, &advice, self.gamma);
        let arm = ArmId(inverse_cdf(&probs, rng.uniform()));
        self.last = Some((arm, advice, probs.clone()));
        Ok(PolicyDecision::with_scores(arm, probs))
    }

    fn observe(&mut self, _: &StepContext<'_>, arms: &[ArmId], rewards: &[f64]) -> Result<()> {
        let (i, r) = single_observation(arms, rewards, self.arms)?;
        let (arm, advice, probs) = self
            .last
            .take()
            .filter(|l| l.0 .0 == i)
            .ok_or_else(|| BanditError::Unsupported("observe without a matching select".into()))?;
        let rho = self.scale.apply(r)?;
        match self.exp4p {
            None => exp4_update(&mut self.weights, &advice, arm.0, rho, &probs, self.gamma),
            Some(params) => exp4p_update(&mut self.weights, &advice, arm.0, rho, &probs, self.gamma, params),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaoPhase {
    Exploration,
    Exploitation,
    Adversarial,
}

/// Stochastic and Adversarial Optimal, two arms.
///
/// `H~_i` is each arm's running average reward. `H^_i` is the average frozen
/// at the switch to exploitation, standing in for the stochastic model's
/// expected reward.
#[derive(Debug, Clone)]
pub struct Sao {
    c: f64,
    stats: [ArmStats; 2],
    phase: SaoPhase,
    tau_star: Option<u64>,
    /// `(better arm, frozen H^)` once exploiting.
    frozen: Option<(usize, [f64; 2])>,
    fallback: Exp3,
}

impl Sao {
    /// `c` defaults to `12 ln(horizon)` when `None`.
    pub fn new(arms: usize, horizon: u64, c: Option<f64>, gamma: f64, scale: RewardScale) -> Result<Self> {
        if arms != 2 {
            return Err(invalid("arms", arms as f64, "SAO is defined for two arms"));
        }
        let c = c.unwrap_or(12.0 * (horizon.max(2) as f64).ln());
        if !(c > 0.0 && c.is_finite()) {
            return Err(invalid("c", c, "must be > 0"));
        }
        Ok(Self {
            c,
            stats: [ArmStats::new(); 2],
            phase: SaoPhase::Exploration,
            tau_star: None,
            frozen: None,
            fallback: Exp3::new(2, gamma, scale)?,
        })
    }

    pub fn phase(&self) -> SaoPhase {
        self.phase
    }

    pub fn tau_star(&self) -> Option<u64> {
        self.tau_star
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Probability of drawing the worse arm while exploiting.
    pub fn worse_probability(tau_star: u64, t: u64) -> f64 {
        (tau_star as f64 / (2.0 * t as f64)).min(1.0)
    }

    fn consistent(&self, t: u64) -> bool {
        let (Some(tau), Some((best, hat))) = (self.tau_star, self.frozen) else {
            return true;
        };
        let worse = 1 - best;
        let gap = self.stats[best].mean() - self.stats[worse].mean();
        let (st, stau) = ((t as f64).sqrt(), (tau as f64).sqrt());
        let c = self.c;
        let cond1 = 8.0 * c / stau <= gap && gap <= 40.0 * c / stau;
        let cond2 = (self.stats[best].mean() - hat[best]).abs() <= 6.0 * c / st;
        let cond3 = (self.stats[worse].mean() - hat[worse]).abs() <= 6.0 * c / stau;
        cond1 && cond2 && cond3
    }
}

impl Policy for Sao {
    fn name(&self) -> &'static str {
        "sao"
    }

    fn num_arms(&self) -> usize {
        2
    }

    fn select(&mut self, step: &StepContext<'_>, rng: &mut RngStream) -> Result<PolicyDecision> {
        match self.phase {
            SaoPhase::Exploration => Ok(PolicyDecision::single(ArmId(rng.index(2)))),
            SaoPhase::Exploitation => {
                let (best, _) = self.frozen.expect("exploitation has a frozen estimate");
                let tau = self.tau_star.expect("exploitation has a switch time");
                let pw = Self::worse_probability(tau, step.t);
                let arm = if rng.uniform() < pw { 1 - best } else { best };
                let mut probs = [0.0; 2];
                probs[best] = 1.0 - pw;
                probs[1 - best] = pw;
                Ok(PolicyDecision::with_scores(ArmId(arm), probs.to_vec()))
            }
            SaoPhase::Adversarial => self.fallback.select(step, rng),
        }
    }

    fn observe(&mut self, step: &StepContext<'_>, arms: &[ArmId], rewards: &[f64]) -> Result<()> {
        let (i, r) = single_observation(arms, rewards, 2)?;
        if self.phase == SaoPhase::Adversarial {
            return self.fallback.observe(step, arms, rewards);
        }
        let r = self.fallback.scaled(r)?;
        self.stats[i].push(r)?;
        let t = step.t;
        match self.phase {
            SaoPhase::Exploration => {
                let both = self.stats.iter().all(ArmStats::is_played);
                let gap = (self.stats[0].mean() - self.stats[1].mean()).abs();
                if both && t as f64 >= self.c * self.c && gap >= 24.0 * self.c / (t as f64).sqrt() {
                    let best = usize::from(self.stats[1].mean() > self.stats[0].mean());
                    self.tau_star = Some(t);
                    self.frozen = Some((best, [self.stats[0].mean(), self.stats[1].mean()]));
                    self.phase = SaoPhase::Exploitation;
                }
            }
            SaoPhase::Exploitation => {
                if !self.consistent(t) {
                    self.phase = SaoPhase::Adversarial;
                    self.fallback.state_mut().reset();
                }
            }
            SaoPhase::Adversarial => unreachable!(),
        }
        Ok(())
    }
}
