//! Policies for drifting and switching rewards: discounted and sliding-window
//! UCB, the Page-Hinkley detector, the Adapt-EvE meta-bandit, Exp3 with
//! resets and a Kalman-filter bandit.

use std::collections::VecDeque;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::adversarial::Exp3;
use super::ucb::UcbTuned;
use super::{check_arms, single_observation, RewardScale};
use crate::error::{invalid, BanditError, Result};
use crate::log::PolicyDecision;
use crate::policy::{Policy, StepContext};
use crate::rng::RngStream;
use crate::stats::{argmax_tiebreak, ArmId, ArmStats};

/// Discounted reward sums and counts, `N_t(gamma, i) = sum_s gamma^(t-s) 1{I_s = i}`.
#[derive(Debug, Clone)]
pub struct DiscountedStats {
    gamma: f64,
    sums: Vec<f64>,
    squares: Vec<f64>,
    counts: Vec<f64>,
}

impl DiscountedStats {
    pub fn new(arms: usize, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(invalid("gamma", gamma, "discount must lie in (0, 1]"));
        }
        let k = check_arms(arms)?;
        Ok(Self {
            gamma,
            sums: vec![0.0; k],
            squares: vec![0.0; k],
            counts: vec![0.0; k],
        })
    }

    /// Discount every arm by one step, then record `reward` for `arm`.
    pub fn push(&mut self, arm: usize, reward: f64) {
        if self.gamma < 1.0 {
            for v in self.sums.iter_mut().chain(&mut self.squares).chain(&mut self.counts) {
                *v *= self.gamma;
            }
        }
        self.sums[arm] += reward;
        self.squares[arm] += reward * reward;
        self.counts[arm] += 1.0;
    }

    pub fn count(&self, arm: usize) -> f64 {
        self.counts[arm]
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    pub fn mean(&self, arm: usize) -> Option<f64> {
        (self.counts[arm] > 0.0).then(|| self.sums[arm] / self.counts[arm])
    }

    pub fn variance(&self, arm: usize) -> Option<f64> {
        self.mean(arm).map(|m| (self.squares[arm] / self.counts[arm] - m * m).max(0.0))
    }
}

/// `2B sqrt(xi ln(sum_j N_j) / N_i)`.
pub fn ducb_pad(stats: &DiscountedStats, arm: usize, b: f64, xi: f64) -> f64 {
    2.0 * b * (xi * stats.total().ln().max(0.0) / stats.count(arm)).sqrt()
}

/// Variance-aware padding: `sqrt((ln n / N_i) min(1/4, V_i + sqrt(2 ln n / N_i)))`.
fn tuned_pad(log_n: f64, n_i: f64, var: f64) -> f64 {
    let v = var + (2.0 * log_n / n_i).sqrt();
    (log_n / n_i * v.min(0.25)).sqrt()
}

/// Discounted UCB (and its UCB-Tuned style variant).
#[derive(Debug, Clone)]
pub struct DiscountedUcb {
    stats: DiscountedStats,
    b: f64,
    xi: f64,
    tuned: bool,
}

impl DiscountedUcb {
    pub fn new(arms: usize, gamma: f64, b: f64, xi: f64, tuned: bool) -> Result<Self> {
        if !(b > 0.0 && xi > 0.0) {
            return Err(invalid("B, xi", b.min(xi), "must be > 0"));
        }
        Ok(Self {
            stats: DiscountedStats::new(arms, gamma)?,
            b,
            xi,
            tuned,
        })
    }

    pub fn stats(&self) -> &DiscountedStats {
        &self.stats
    }

    pub fn scores(&self) -> Vec<f64> {
        let log_n = self.stats.total().ln().max(0.0);
        (0..self.stats.counts.len())
            .map(|i| match self.stats.mean(i) {
                None => f64::INFINITY,
                Some(m) if self.tuned => m + tuned_pad(log_n, self.stats.count(i), self.stats.variance(i).unwrap_or(0.0)),
                Some(m) => m + ducb_pad(&self.stats, i, self.b, self.xi),
            })
            .collect()
    }
}

impl Policy for DiscountedUcb {
    fn name(&self) -> &'static str {
        if self.tuned {
            "d-ucb-tuned"
        } else {
            "d-ucb"
        }
    }

    fn num_arms(&self) -> usize {
        self.stats.counts.len()
    }

    fn select(&mut self, _: &StepContext<'_>, rng: &mut RngStream) -> Result<PolicyDecision> {
        let scores = self.scores();
        Ok(PolicyDecision::with_scores(argmax_tiebreak(&scores, rng)?, scores))
    }

    fn observe(&mut self, _: &StepContext<'_>, arms: &[ArmId], rewards: &[f64]) -> Result<()> {
        let (i, r) = single_observation(arms, rewards, self.num_arms())?;
        self.stats.push(i, r);
        Ok(())
    }
}

/// The last `tau` plays (all plays when `tau` is `None`).
#[derive(Debug, Clone)]
pub struct WindowBuffer {
    tau: Option<usize>,
    ring: VecDeque<(usize, f64)>,
    sums: Vec<f64>,
    squares: Vec<f64>,
    counts: Vec<u64>,
    since_rebuild: usize,
}

impl WindowBuffer {
    pub fn new(arms: usize, tau: Option<usize>) -> Result<Self> {
        if tau == Some(0) {
            return Err(invalid("tau", 0.0, "window must be >= 1"));
        }
        let k = check_arms(arms)?;
        Ok(Self {
            tau,
            ring: VecDeque::new(),
            sums: vec![0.0; k],
            squares: vec![0.0; k],
            counts: vec![0; k],
            since_rebuild: 0,
        })
    }

    pub fn push(&mut self, arm: usize, reward: f64) {
        self.ring.push_back((arm, reward));
        self.sums[arm] += reward;
        self.squares[arm] += reward * reward;
        self.counts[arm] += 1;
        if let Some(tau) = self.tau {
            if self.ring.len() > tau {
                let (a, r) = self.ring.pop_front().expect("nonempty window");
                self.counts[a] -= 1;
                self.sums[a] -= r;
                self.squares[a] -= r * r;
                self.since_rebuild += 1;
                // Recompute from scratch now and then so subtraction error cannot accumulate.
                if self.since_rebuild >= tau.max(1024) {
                    self.rebuild();
                }
            }
        }
    }

    fn rebuild(&mut self) {
        self.sums.fill(0.0);
        self.squares.fill(0.0);
        self.counts.fill(0);
        for &(a, r) in &self.ring {
            self.sums[a] += r;
            self.squares[a] += r * r;
            self.counts[a] += 1;
        }
        self.since_rebuild = 0;
    }

    pub fn len(&self) -> usize {
        self.ring.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ring.is_empty()
    }

    pub fn oldest(&self) -> Option<(usize, f64)> {
        self.ring.front().copied()
    }

    pub fn count(&self, arm: usize) -> u64 {
        self.counts[arm]
    }

    pub fn mean(&self, arm: usize) -> Option<f64> {
        (self.counts[arm] > 0).then(|| self.sums[arm] / self.counts[arm] as f64)
    }

    pub fn variance(&self, arm: usize) -> Option<f64> {
        self.mean(arm)
            .map(|m| (self.squares[arm] / self.counts[arm] as f64 - m * m).max(0.0))
    }
}

/// `B sqrt(xi ln(min(t, tau)) / N_t(tau, i))`.
pub fn swucb_pad(buffer: &WindowBuffer, arm: usize, b: f64, xi: f64, t: u64) -> f64 {
    let horizon = buffer.tau.map_or(t, |tau| t.min(tau as u64)) as f64;
    b * (xi * horizon.ln().max(0.0) / buffer.count(arm) as f64).sqrt()
}

/// Sliding-window UCB (and its UCB-Tuned style variant).
#[derive(Debug, Clone)]
pub struct SlidingWindowUcb {
    buffer: WindowBuffer,
    b: f64,
    xi: f64,
    tuned: bool,
}

impl SlidingWindowUcb {
    pub fn new(arms: usize, tau: Option<usize>, b: f64, xi: f64, tuned: bool) -> Result<Self> {
        if !(b > 0.0 && xi > 0.0) {
            return Err(invalid("B, xi", b.min(xi), "must be > 0"));
        }
        Ok(Self {
            buffer: WindowBuffer::new(arms, tau)?,
            b,
            xi,
            tuned,
        })
    }

    pub fn buffer(&self) -> &WindowBuffer {
        &self.buffer
    }

    pub fn scores(&self, t: u64) -> Vec<f64> {
        let horizon = self.buffer.tau.map_or(t, |tau| t.min(tau as u64)) as f64;
        (0..self.buffer.counts.len())
            .map(|i| match self.buffer.mean(i) {
                None => f64::INFINITY,
                Some(m) if self.tuned => m + tuned_pad(
                    horizon.ln().max(0.0),
                    self.buffer.count(i) as f64,
                    self.buffer.variance(i).unwrap_or(0.0),
                ),
                Some(m) => m + swucb_pad(&self.buffer, i, self.b, self.xi, t),
            })
            .collect()
    }
}

impl Policy for SlidingWindowUcb {
    fn name(&self) -> &'static str {
        if self.tuned {
            "sw-ucb-tuned"
        } else {
            "sw-ucb"
        }
    }

    fn num_arms(&self) -> usize {
        self.buffer.counts.len()
    }

    fn select(&mut self, step: &StepContext<'_>, rng: &mut RngStream) -> Result<PolicyDecision> {
        let scores = self.scores(step.t);
        Ok(PolicyDecision::with_scores(argmax_tiebreak(&scores, rng)?, scores))
    }

    fn observe(&mut self, _: &StepContext<'_>, arms: &[ArmId], rewards: &[f64]) -> Result<()> {
        let (i, r) = single_observation(arms, rewards, self.num_arms())?;
        self.buffer.push(i, r);
        Ok(())
    }
}

/// Two-sided Page-Hinkley test.
///
/// Upward: `U += x - mean - delta`, alarm when `U - min U > lambda`.
/// Downward: `D += x - mean + delta`, alarm when `max D - D > lambda`.
/// `mean` is the running mean including `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct PageHinkley {
    delta: f64,
    lambda: f64,
    n: u64,
    mean: f64,
    up: f64,
    up_min: f64,
    down: f64,
    down_max: f64,
}

impl PageHinkley {
    pub fn new(delta: f64, lambda: f64) -> Result<Self> {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(invalid("delta", delta, "must be finite and >= 0"));
        }
        if !(lambda > 0.0) {
            return Err(invalid("lambda", lambda, "must be > 0"));
        }
        Ok(Self {
            delta,
            lambda,
            n: 0,
            mean: 0.0,
            up: 0.0,
            up_min: 0.0,
            down: 0.0,
            down_max: 0.0,
        })
    }

    pub fn reset(&mut self) {
        *self = Self {
            delta: self.delta,
            lambda: self.lambda,
            ..Self::new(0.0, 1.0).expect("valid")
        };
    }

    /// Feed one value; returns whether either test alarms.
    pub fn update(&mut self, x: f64) -> bool {
        self.n += 1;
        self.mean += (x - self.mean) / self.n as f64;
        self.up += x - self.mean - self.delta;
        self.up_min = self.up_min.min(self.up);
        self.down += x - self.mean + self.delta;
        self.down_max = self.down_max.max(self.down);
        self.up - self.up_min > self.lambda || self.down_max - self.down > self.lambda
    }

    /// The larger of the two test statistics.
    pub fn statistic(&self) -> f64 {
        (self.up - self.up_min).max(self.down_max - self.down)
    }
}

/// Builds a fresh inner instance for Adapt-EvE.
pub type InstanceFactory = Box<dyn Fn() -> Result<Box<dyn Policy>> + Send + Sync>;

struct Instance {
    policy: Box<dyn Policy>,
    /// Steps this instance has acted for; it sees its own clock.
    clock: u64,
}

impl Instance {
    fn new(policy: Box<dyn Policy>) -> Self {
        Self { policy, clock: 0 }
    }
}

struct MetaDuel {
    /// `[trained, fresh]`.
    candidates: [Instance; 2],
    meta: UcbTuned,
    step: u64,
    active: usize,
}

/// Standard errors by which the fresh instance must beat the incumbent.
const DUEL_MARGIN_SE: f64 = 2.0;

/// The incumbent keeps its place unless the challenger's meta mean is higher
/// by more than `DUEL_MARGIN_SE` standard errors of the difference.
fn fresh_clearly_better(trained: &ArmStats, fresh: &ArmStats) -> bool {
    if fresh.count() < 2 {
        return false;
    }
    if trained.count() < 2 {
        return fresh.mean() > trained.mean();
    }
    let se = (trained.sample_variance().unwrap_or(0.0) / trained.count() as f64
        + fresh.sample_variance().unwrap_or(0.0) / fresh.count() as f64)
        .sqrt();
    fresh.mean() - trained.mean() > DUEL_MARGIN_SE * se
}

/// Which instance survived a meta-duel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DuelOutcome {
    Trained,
    Fresh,
}

/// Change-point detection with a meta-bandit: a Page-Hinkley alarm starts a
/// two-armed UCB-Tuned duel between the trained instance and a fresh one for
/// `period` steps; the fresh one replaces it only if clearly better.
pub struct AdaptEvE {
    arms: usize,
    factory: InstanceFactory,
    current: Option<Instance>,
    duel: Option<MetaDuel>,
    ph: PageHinkley,
    period: u64,
    alarms: u64,
    outcomes: Vec<DuelOutcome>,
}

impl std::fmt::Debug for AdaptEvE {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AdaptEvE")
            .field("arms", &self.arms)
            .field("ph", &self.ph)
            .field("period", &self.period)
            .field("alarms", &self.alarms)
            .field("in_duel", &self.duel.is_some())
            .finish()
    }
}

impl AdaptEvE {
    pub fn new(arms: usize, factory: InstanceFactory, ph: PageHinkley, period: u64) -> Result<Self> {
        check_arms(arms)?;
        if period == 0 {
            return Err(invalid("period", 0.0, "meta period must be >= 1"));
        }
        let first = factory()?;
        if first.num_arms() != arms {
            return Err(BanditError::Dimension {
                expected: arms,
                got: first.num_arms(),
            });
        }
        Ok(Self {
            arms,
            factory,
            current: Some(Instance::new(first)),
            duel: None,
            ph,
            period,
            alarms: 0,
            outcomes: Vec::new(),
        })
    }

    /// UCB-Tuned inner instances.
    pub fn with_ucb_tuned(arms: usize, delta: f64, lambda: f64, period: u64) -> Result<Self> {
        let factory: InstanceFactory = Box::new(move || Ok(Box::new(UcbTuned::new(arms)?) as Box<dyn Policy>));
        Self::new(arms, factory, PageHinkley::new(delta, lambda)?, period)
    }

    pub fn alarms(&self) -> u64 {
        self.alarms
    }

    pub fn outcomes(&self) -> &[DuelOutcome] {
        &self.outcomes
    }

    pub fn in_duel(&self) -> bool {
        self.duel.is_some()
    }

    /// Start a meta-duel as if the detector had just fired.
    pub fn trigger_alarm(&mut self) -> Result<()> {
        if self.duel.is_some() {
            return Ok(());
        }
        self.alarms += 1;
        let trained = self.current.take().expect("an instance is active outside duels");
        let fresh = Instance::new((self.factory)()?);
        self.duel = Some(MetaDuel {
            candidates: [trained, fresh],
            meta: UcbTuned::new(2)?,
            step: 0,
            active: 0,
        });
        Ok(())
    }

    fn finish_duel(&mut self) {
        let duel = self.duel.take().expect("duel in progress");
        let fresh_wins = fresh_clearly_better(&duel.meta.stats()[0], &duel.meta.stats()[1]);
        let [trained, fresh] = duel.candidates;
        let (winner, outcome) = if fresh_wins {
            (fresh, DuelOutcome::Fresh)
        } else {
            (trained, DuelOutcome::Trained)
        };
        self.outcomes.push(outcome);
        self.current = Some(winner);
        self.ph.reset();
    }
}

impl Policy for AdaptEvE {
    fn name(&self) -> &'static str {
        "adapt-eve"
    }

    fn num_arms(&self) -> usize {
        self.arms
    }

    fn select(&mut self, step: &StepContext<'_>, rng: &mut RngStream) -> Result<PolicyDecision> {
        let inst = match &mut self.duel {
            None => self.current.as_mut().expect("active instance"),
            Some(duel) => {
                duel.step += 1;
                duel.active = duel.meta.select(&StepContext::at(duel.step), rng)?.arm().0;
                &mut duel.candidates[duel.active]
            }
        };
        inst.clock += 1;
        let local = StepContext {
            t: inst.clock,
            context: step.context,
        };
        inst.policy.select(&local, rng)
    }

    fn observe(&mut self, step: &StepContext<'_>, arms: &[ArmId], rewards: &[f64]) -> Result<()> {
        let (_, r) = single_observation(arms, rewards, self.arms)?;
        match &mut self.duel {
            None => {
                let inst = self.current.as_mut().expect("active instance");
                let local = StepContext {
                    t: inst.clock,
                    context: step.context,
                };
                inst.policy.observe(&local, arms, rewards)?;
                if self.ph.update(r) {
                    self.trigger_alarm()?;
                }
            }
            Some(duel) => {
                let inst = &mut duel.candidates[duel.active];
                let local = StepContext {
                    t: inst.clock,
                    context: step.context,
                };
                inst.policy.observe(&local, arms, rewards)?;
                duel.meta
                    .observe(&StepContext::at(duel.step), &[ArmId(duel.active)], &[r])?;
                if duel.step >= self.period {
                    self.finish_duel();
                }
            }
        }
        Ok(())
    }
}

/// Exp3 with resets: γ-observations are grouped into intervals of fixed
/// size; at the end of an interval the weights reset to 1 if some arm's
/// interval mean beats the believed-best arm's by at least `margin`.
#[derive(Debug, Clone)]
pub struct Exp3R {
    exp3: Exp3,
    interval: u64,
    margin: f64,
    window: Vec<ArmStats>,
    observed: u64,
    resets: Vec<u64>,
}

impl Exp3R {
    pub fn new(arms: usize, gamma: f64, interval: u64, margin: f64, scale: RewardScale) -> Result<Self> {
        if interval == 0 {
            return Err(invalid("interval", 0.0, "must be >= 1"));
        }
        if !(margin >= 0.0) {
            return Err(invalid("margin", margin, "must be >= 0"));
        }
        if !(gamma > 0.0) {
            return Err(invalid("gamma", gamma, "Exp3.R needs gamma > 0 to observe anything"));
        }
        Ok(Self {
            exp3: Exp3::new(arms, gamma, scale)?,
            interval,
            margin,
            window: vec![ArmStats::new(); arms],
            observed: 0,
            resets: Vec::new(),
        })
    }

    /// Steps at which the weights were reset.
    pub fn resets(&self) -> &[u64] {
        &self.resets
    }

    pub fn exp3(&self) -> &Exp3 {
        &self.exp3
    }

    fn drift_detected(&self) -> bool {
        let w = &self.exp3.state().weights;
        let best = (0..w.len()).fold(0, |b, i| if w[i] > w[b] { i } else { b });
        if !self.window[best].is_played() {
            return false;
        }
        let reference = self.window[best].mean();
        self.window
            .iter()
            .any(|s| s.is_played() && s.mean() - reference >= self.margin)
    }
}

impl Policy for Exp3R {
    fn name(&self) -> &'static str {
        "exp3r"
    }

    fn num_arms(&self) -> usize {
        self.exp3.num_arms()
    }

    fn select(&mut self, step: &StepContext<'_>, rng: &mut RngStream) -> Result<PolicyDecision> {
        self.exp3.select(step, rng)
    }

    fn observe(&mut self, step: &StepContext<'_>, arms: &[ArmId], rewards: &[f64]) -> Result<()> {
        let uniform = self.exp3.last_was_uniform();
        self.exp3.observe(step, arms, rewards)?;
        if uniform {
            let (i, r) = single_observation(arms, rewards, self.num_arms())?;
            self.window[i].push(self.exp3.scaled(r)?)?;
            self.observed += 1;
            if self.observed == self.interval {
                if self.drift_detected() {
                    self.exp3.state_mut().reset();
                    self.resets.push(step.t);
                }
                self.window.fill(ArmStats::new());
                self.observed = 0;
            }
        }
        Ok(())
    }
}

/// Posterior mean and variance of one arm's drifting mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanArm {
    pub mu: f64,
    pub var: f64,
}

/// Measurement update after observing `x`, with the random-walk variance
/// `tr` added to the prior first.
pub fn kalman_update(arm: KalmanArm, x: f64, obs_var: f64, tr_var: f64) -> KalmanArm {
    let prior = arm.var + tr_var;
    let denom = prior + obs_var;
    if denom == 0.0 {
        return arm;
    }
    KalmanArm {
        mu: (prior * x + obs_var * arm.mu) / denom,
        var: prior * obs_var / denom,
    }
}

/// An unplayed arm's mean is unchanged and its variance grows by `tr`.
pub fn kalman_idle(arm: KalmanArm, tr_var: f64) -> KalmanArm {
    KalmanArm {
        mu: arm.mu,
        var: arm.var + tr_var,
    }
}

/// Steady-state posterior variance of an arm played every step:
/// the positive root of `s^2 + tr s - tr ob = 0`.
pub fn kalman_steady_state(obs_var: f64, tr_var: f64) -> f64 {
    (-tr_var + (tr_var * tr_var + 4.0 * tr_var * obs_var).sqrt()) / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KalmanSelection {
    /// Argmax of one `Normal(mu, var)` draw per arm.
    #[default]
    Thompson,
    /// Argmax of `mu + 2 sigma`.
    Ucb,
}

#[derive(Debug, Clone)]
pub struct KalmanBandit {
    arms: Vec<KalmanArm>,
    obs_var: f64,
    tr_var: f64,
    selection: KalmanSelection,
}

impl KalmanBandit {
    /// Arms start at the midpoint of `bounds` with variance `(range / 2)^2`.
    pub fn new(arms: usize, obs_var: f64, tr_var: f64, bounds: (f64, f64), selection: KalmanSelection) -> Result<Self> {
        if !(obs_var > 0.0) {
            return Err(invalid("obs_var", obs_var, "must be > 0"));
        }
        if !(tr_var >= 0.0) {
            return Err(invalid("tr_var", tr_var, "must be >= 0"));
        }
        let (lo, hi) = bounds;
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(invalid("bounds", lo, "need finite lo < hi"));
        }
        let half = (hi - lo) / 2.0;
        Ok(Self {
            arms: vec![
                KalmanArm {
                    mu: lo + half,
                    var: half * half,
                };
                check_arms(arms)?
            ],
            obs_var,
            tr_var,
            selection,
        })
    }

    pub fn arms(&self) -> &[KalmanArm] {
        &self.arms
    }
}

impl Policy for KalmanBandit {
    fn name(&self) -> &'static str {
        "kalman"
    }

    fn num_arms(&self) -> usize {
        self.arms.len()
    }

    fn select(&mut self, _: &StepContext<'_>, rng: &mut RngStream) -> Result<PolicyDecision> {
        let scores: Vec<f64> = match self.selection {
            KalmanSelection::Thompson => self
                .arms
                .iter()
                .map(|a| {
                    let z: f64 = StandardNormal.sample(rng);
                    a.mu + a.var.sqrt() * z
                })
                .collect(),
            KalmanSelection::Ucb => self.arms.iter().map(|a| a.mu + 2.0 * a.var.sqrt()).collect(),
        };
        Ok(PolicyDecision::with_scores(argmax_tiebreak(&scores, rng)?, scores))
    }

    fn observe(&mut self, _: &StepContext<'_>, arms: &[ArmId], rewards: &[f64]) -> Result<()> {
        let (i, r) = single_observation(arms, rewards, self.arms.len())?;
        for (j, a) in self.arms.iter_mut().enumerate() {
            *a = if j == i {
                kalman_update(*a, r, self.obs_var, self.tr_var)
            } else {
                kalman_idle(*a, self.tr_var)
            };
        }
        Ok(())
    }
}
