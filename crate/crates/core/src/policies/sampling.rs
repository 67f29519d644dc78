//! Probability matching and sampling methods: Thompson sampling (plain and
//! optimistic), POKER and BESA.

use rand::seq::{index, SliceRandom};
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{check_arms, require_unit, single_observation};
use crate::error::{invalid, Result};
use crate::log::PolicyDecision;
use crate::numeric::normal_upper_tail;
use crate::policy::{Policy, StepContext};
use crate::rng::RngStream;
use crate::stats::{argmax_tiebreak, ArmId, ArmStats};

/// Likelihood model and prior for a [`PosteriorBank`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PriorSpec {
    Beta {
        #[serde(default = "one")]
        a: f64,
        #[serde(default = "one")]
        b: f64,
    },
    /// Normal likelihood; the noise variance is the pooled residual variance
    /// once there are residual degrees of freedom, `noise_var` before that.
    Normal {
        #[serde(default)]
        mean: f64,
        #[serde(default = "one")]
        var: f64,
        #[serde(default = "one")]
        noise_var: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec::Beta { a: 1.0, b: 1.0 }
    }
}

/// One arm's current posterior over its mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Posterior {
    Beta { a: f64, b: f64 },
    Normal { mean: f64, sd: f64 },
}

impl Posterior {
    pub fn mean(&self) -> f64 {
        match *self {
            Posterior::Beta { a, b } => a / (a + b),
            Posterior::Normal { mean, .. } => mean,
        }
    }

    pub fn draw(&self, rng: &mut RngStream) -> f64 {
        match *self {
            Posterior::Beta { a, b } => Beta::new(a, b).expect("validated Beta parameters").sample(rng),
            Posterior::Normal { mean, sd } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sd * z
            }
        }
    }
}

/// One conjugate posterior per arm, computed from per-arm sufficient statistics.
#[derive(Debug, Clone)]
pub struct PosteriorBank {
    priors: Vec<PriorSpec>,
    stats: Vec<ArmStats>,
}

impl PosteriorBank {
    pub fn new(arms: usize, prior: PriorSpec) -> Result<Self> {
        Self::with_priors(vec![prior; check_arms(arms)?])
    }

    /// A bank whose arms start from the given `Beta(a, b)` priors.
    pub fn from_beta(params: &[(f64, f64)]) -> Result<Self> {
        Self::with_priors(params.iter().map(|&(a, b)| PriorSpec::Beta { a, b }).collect())
    }

    pub fn with_priors(priors: Vec<PriorSpec>) -> Result<Self> {
        check_arms(priors.len())?;
        let gaussian = matches!(priors[0], PriorSpec::Normal { .. });
        for p in &priors {
            if matches!(p, PriorSpec::Normal { .. }) != gaussian {
                return Err(invalid("prior", 0.0, "all arms must share one likelihood model"));
            }
            match *p {
                PriorSpec::Beta { a, b } => {
                    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
                        return Err(invalid("a, b", a.min(b), "Beta parameters must be finite and > 0"));
                    }
                }
                PriorSpec::Normal { mean, var, noise_var } => {
                    if !mean.is_finite() || !(var > 0.0) || !(noise_var > 0.0) {
                        return Err(invalid("var", var, "need a finite mean and positive variances"));
                    }
                }
            }
        }
        Ok(Self {
            stats: vec![ArmStats::new(); priors.len()],
            priors,
        })
    }

    pub fn num_arms(&self) -> usize {
        self.priors.len()
    }

    pub fn stats(&self) -> &[ArmStats] {
        &self.stats
    }

    pub fn observe(&mut self, arm: usize, reward: f64) -> Result<()> {
        let r = match self.priors[arm] {
            PriorSpec::Beta { .. } => require_unit(reward)?,
            PriorSpec::Normal { .. } => reward,
        };
        self.stats[arm].push(r)
    }

    /// Pooled residual variance across arms, if any arm has two or more plays.
    pub fn pooled_variance(&self) -> Option<f64> {
        let (ss, df) = self.stats.iter().filter(|s| s.is_played()).fold((0.0, 0u64), |(ss, df), s| {
            (ss + s.centered_sum_squares(), df + s.count() - 1)
        });
        (df > 0).then(|| ss / df as f64)
    }

    pub fn posterior(&self, arm: usize) -> Posterior {
        let s = &self.stats[arm];
        let n = s.count() as f64;
        match self.priors[arm] {
            PriorSpec::Beta { a, b } => Posterior::Beta {
                a: a + s.sum(),
                b: b + n - s.sum(),
            },
            PriorSpec::Normal { mean, var, noise_var } => {
                let noise = self.pooled_variance().filter(|v| *v > 0.0).unwrap_or(noise_var);
                let precision = 1.0 / var + n / noise;
                Posterior::Normal {
                    mean: (mean / var + s.sum() / noise) / precision,
                    sd: (1.0 / precision).sqrt(),
                }
            }
        }
    }

    /// One posterior draw per arm, in arm order.
    pub fn draws(&self, rng: &mut RngStream) -> Vec<f64> {
        (0..self.num_arms()).map(|i| self.posterior(i).draw(rng)).collect()
    }
}

/// Argmax of one posterior draw per arm.
pub fn thompson_select(bank: &PosteriorBank, rng: &mut RngStream) -> Result<PolicyDecision> {
    let draws = bank.draws(rng);
    Ok(PolicyDecision::with_scores(argmax_tiebreak(&draws, rng)?, draws))
}

/// As [`thompson_select`], with each draw floored at its posterior mean.
pub fn thompson_select_optimistic(bank: &PosteriorBank, rng: &mut RngStream) -> Result<PolicyDecision> {
    let draws: Vec<f64> = (0..bank.num_arms())
        .map(|i| {
            let p = bank.posterior(i);
            p.draw(rng).max(p.mean())
        })
        .collect();
    Ok(PolicyDecision::with_scores(argmax_tiebreak(&draws, rng)?, draws))
}

#[derive(Debug, Clone)]
pub struct ThompsonSampling {
    bank: PosteriorBank,
    optimistic: bool,
}

impl ThompsonSampling {
    pub fn new(arms: usize, prior: PriorSpec) -> Result<Self> {
        Ok(Self {
            bank: PosteriorBank::new(arms, prior)?,
            optimistic: false,
        })
    }

    pub fn optimistic(arms: usize, prior: PriorSpec) -> Result<Self> {
        Ok(Self {
            optimistic: true,
            ..Self::new(arms, prior)?
        })
    }

    pub fn bank(&self) -> &PosteriorBank {
        &self.bank
    }
}

impl Policy for ThompsonSampling {
    fn name(&self) -> &'static str {
        if self.optimistic {
            "optimistic-thompson"
        } else {
            "thompson"
        }
    }

    fn num_arms(&self) -> usize {
        self.bank.num_arms()
    }

    fn select(&mut self, _: &StepContext<'_>, rng: &mut RngStream) -> Result<PolicyDecision> {
        if self.optimistic {
            thompson_select_optimistic(&self.bank, rng)
        } else {
            thompson_select(&self.bank, rng)
        }
    }

    fn observe(&mut self, _: &StepContext<'_>, arms: &[ArmId], rewards: &[f64]) -> Result<()> {
        let (i, r) = single_observation(arms, rewards, self.bank.num_arms())?;
        self.bank.observe(i, r)
    }
}

/// `(mu_(1) - mu_(floor(sqrt K))) / sqrt K` over means sorted descending.
pub fn poker_delta(sorted_desc: &[f64]) -> f64 {
    let k = sorted_desc.len();
    if k <= 1 {
        return 0.0;
    }
    let root = (k as f64).sqrt();
    let idx = (root.floor() as usize).clamp(1, k);
    (sorted_desc[0] - sorted_desc[idx - 1]) / root
}

/// `mean + delta (H - t) P[mu >= best + delta]` with the probability taken
/// under `Normal(mean, se)`.
pub fn poker_score(mean: f64, se: f64, best: f64, delta: f64, remaining: f64) -> f64 {
    if remaining <= 0.0 {
        return mean;
    }
    mean + delta * remaining * normal_upper_tail(best + delta, mean, se)
}

/// Price of Knowledge and Estimated Reward.
#[derive(Debug, Clone)]
pub struct Poker {
    horizon: u64,
    stats: Vec<ArmStats>,
}

impl Poker {
    pub fn new(arms: usize, horizon: u64) -> Result<Self> {
        if horizon == 0 {
            return Err(invalid("horizon", 0.0, "must be >= 1"));
        }
        Ok(Self {
            horizon,
            stats: vec![ArmStats::new(); check_arms(arms)?],
        })
    }

    /// Pooled standard deviation used for arms with a single observation.
    fn pooled_sd(&self) -> f64 {
        let (ss, df) = self.stats.iter().filter(|s| s.is_played()).fold((0.0, 0u64), |(ss, df), s| {
            (ss + s.centered_sum_squares(), df + s.count() - 1)
        });
        if df == 0 {
            // Largest standard deviation of a [0, 1] reward.
            0.5
        } else {
            (ss / df as f64).sqrt()
        }
    }

    pub fn scores(&self, t: u64) -> Vec<f64> {
        if self.stats.iter().any(|s| !s.is_played()) {
            return self
                .stats
                .iter()
                .map(|s| if s.is_played() { s.mean() } else { f64::INFINITY })
                .collect();
        }
        let mut sorted: Vec<f64> = self.stats.iter().map(ArmStats::mean).collect();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let best = sorted[0];
        let delta = poker_delta(&sorted);
        let remaining = self.horizon.saturating_sub(t) as f64;
        let pooled = self.pooled_sd();
        self.stats
            .iter()
            .map(|s| {
                let sd = s.sample_variance().map_or(pooled, f64::sqrt);
                poker_score(s.mean(), sd / (s.count() as f64).sqrt(), best, delta, remaining)
            })
            .collect()
    }
}

impl Policy for Poker {
    fn name(&self) -> &'static str {
        "poker"
    }

    fn num_arms(&self) -> usize {
        self.stats.len()
    }

    fn select(&mut self, step: &StepContext<'_>, rng: &mut RngStream) -> Result<PolicyDecision> {
        let scores = self.scores(step.t);
        Ok(PolicyDecision::with_scores(argmax_tiebreak(&scores, rng)?, scores))
    }

    fn observe(&mut self, _: &StepContext<'_>, arms: &[ArmId], rewards: &[f64]) -> Result<()> {
        let (i, r) = single_observation(arms, rewards, self.stats.len())?;
        self.stats[i].push(r)
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// One BESA comparison. The longer history is subsampled without replacement
/// down to the shorter length; ties go to the less played arm, then to a coin.
pub fn besa_duel(i: ArmId, hist_i: &[f64], j: ArmId, hist_j: &[f64], rng: &mut RngStream) -> ArmId {
    let (ni, nj) = (hist_i.len(), hist_j.len());
    let sub = |hist: &[f64], m: usize, rng: &mut RngStream| -> f64 {
        let picked = index::sample(rng, hist.len(), m);
        picked.iter().map(|k| hist[k]).sum::<f64>() / m as f64
    };
    let (mi, mj) = match ni.cmp(&nj) {
        std::cmp::Ordering::Equal => (mean(hist_i), mean(hist_j)),
        std::cmp::Ordering::Greater => (sub(hist_i, nj, rng), mean(hist_j)),
        std::cmp::Ordering::Less => (mean(hist_i), sub(hist_j, ni, rng)),
    };
    if mi > mj {
        i
    } else if mj > mi {
        j
    } else if ni != nj {
        if ni < nj {
            i
        } else {
            j
        }
    } else if rng.index(2) == 0 {
        i
    } else {
        j
    }
}

/// Single-elimination BESA tournament over a random permutation of the arms.
/// The bracket halves recursively (left half rounded up), so an odd group
/// hands its extra arm a bye.
pub fn besa_tournament(histories: &[Vec<f64>], rng: &mut RngStream) -> Result<ArmId> {
    check_arms(histories.len())?;
    let mut order: Vec<ArmId> = (0..histories.len()).map(ArmId).collect();
    order.shuffle(rng);
    fn bracket(arms: &[ArmId], h: &[Vec<f64>], rng: &mut RngStream) -> ArmId {
        if arms.len() == 1 {
            return arms[0];
        }
        let mid = arms.len().div_ceil(2);
        let a = bracket(&arms[..mid], h, rng);
        let b = bracket(&arms[mid..], h, rng);
        besa_duel(a, &h[a.0], b, &h[b.0], rng)
    }
    Ok(bracket(&order, histories, rng))
}

/// Best Empirical Sampled Average. Keeps every reward, so memory grows
/// linearly with the horizon.
#[derive(Debug, Clone)]
pub struct Besa {
    histories: Vec<Vec<f64>>,
}

impl Besa {
    pub fn new(arms: usize) -> Result<Self> {
        Ok(Self {
            histories: vec![Vec::new(); check_arms(arms)?],
        })
    }

    pub fn histories(&self) -> &[Vec<f64>] {
        &self.histories
    }
}

impl Policy for Besa {
    fn name(&self) -> &'static str {
        "besa"
    }

    fn num_arms(&self) -> usize {
        self.histories.len()
    }

    fn select(&mut self, _: &StepContext<'_>, rng: &mut RngStream) -> Result<PolicyDecision> {
        if self.histories.iter().any(Vec::is_empty) {
            let scores: Vec<f64> = self
                .histories
                .iter()
                .map(|h| if h.is_empty() { f64::INFINITY } else { f64::NAN })
                .collect();
            return Ok(PolicyDecision::single(argmax_tiebreak(&scores, rng)?));
        }
        Ok(PolicyDecision::single(besa_tournament(&self.histories, rng)?))
    }

    fn observe(&mut self, _: &StepContext<'_>, arms: &[ArmId], rewards: &[f64]) -> Result<()> {
        let (i, r) = single_observation(arms, rewards, self.histories.len())?;
        self.histories[i].push(r);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn freq(n: usize, mut f: impl FnMut() -> bool) -> f64 {
        (0..n).filter(|_| f()).count() as f64 / n as f64
    }

    #[test]
    fn thompson_concentrated_posteriors() {
        let bank = PosteriorBank::from_beta(&[(1e6, 1.0), (1.0, 1e6)]).unwrap();
        let mut rng = RngStream::new(1, 0);
        let f = freq(10_000, || thompson_select(&bank, &mut rng).unwrap().arm() == ArmId(0));
        assert!(f > 0.999);
    }

    #[test]
    fn thompson_symmetry() {
        let bank = PosteriorBank::from_beta(&[(3.0, 4.0), (3.0, 4.0)]).unwrap();
        let mut rng = RngStream::new(2, 0);
        let f = freq(10_000, || thompson_select(&bank, &mut rng).unwrap().arm() == ArmId(0));
        assert!((f - 0.5).abs() < 0.02);
    }

    #[test]
    fn thompson_order_statistic() {
        // X ~ Beta(2,1) has density 2x; P(X > U) = E[X] = 2/3.
        let bank = PosteriorBank::from_beta(&[(2.0, 1.0), (1.0, 1.0)]).unwrap();
        let mut rng = RngStream::new(3, 0);
        let f = freq(10_000, || thompson_select(&bank, &mut rng).unwrap().arm() == ArmId(0));
        assert!((f - 2.0 / 3.0).abs() < 0.02, "{f}");
    }

    #[test]
    fn optimistic_draw_mean() {
        let bank = PosteriorBank::from_beta(&[(1.0, 1.0)]).unwrap();
        let mut rng = RngStream::new(4, 0);
        let n = 100_000;
        let total: f64 = (0..n)
            .map(|_| thompson_select_optimistic(&bank, &mut rng).unwrap().scores.unwrap()[0])
            .sum();
        assert!((total / n as f64 - 0.625).abs() < 0.01);
        assert_eq!(thompson_select_optimistic(&bank, &mut rng).unwrap().arm(), ArmId(0));
    }

    #[test]
    fn gaussian_bank_uses_pooled_variance() {
        let mut bank = PosteriorBank::new(2, PriorSpec::Normal { mean: 0.0, var: 1.0, noise_var: 1.0 }).unwrap();
        assert_eq!(bank.posterior(0), Posterior::Normal { mean: 0.0, sd: 1.0 });
        bank.observe(0, 1.0).unwrap();
        // No residual degrees of freedom yet: noise variance 1.
        assert_eq!(bank.posterior(0), Posterior::Normal { mean: 0.5, sd: 0.5f64.sqrt() });
        bank.observe(0, 3.0).unwrap();
        bank.observe(1, 5.0).unwrap();
        // Residuals: arm 0 has SS 2 on 1 df, arm 1 none.
        assert_eq!(bank.pooled_variance(), Some(2.0));
    }

    #[test]
    fn beta_bank_rejects_out_of_range() {
        let mut bank = PosteriorBank::new(2, PriorSpec::default()).unwrap();
        assert!(bank.observe(0, 1.2).is_err());
        assert!(PosteriorBank::from_beta(&[(0.0, 1.0)]).is_err());
    }

    #[test]
    fn poker_delta_values() {
        assert_eq!(poker_delta(&[0.7]), 0.0);
        assert_abs_diff_eq!(poker_delta(&[0.9, 0.7, 0.5, 0.1]), 0.1, epsilon = 1e-15);
        let nine = [0.8, 0.6, 0.5, 0.4, 0.4, 0.3, 0.2, 0.1, 0.0];
        assert_abs_diff_eq!(poker_delta(&nine), 0.1, epsilon = 1e-15);
    }

    #[test]
    fn poker_score_values() {
        assert_eq!(poker_score(0.4, 0.1, 0.5, 0.1, 0.0), 0.4);
        assert_abs_diff_eq!(poker_score(0.6, 0.1, 0.5, 0.1, 10.0), 0.6 + 0.5, epsilon = 1e-15);
        // Phi(-1) from a Normal table.
        assert_abs_diff_eq!(poker_score(0.5, 0.1, 0.5, 0.1, 10.0), 0.5 + 0.158655253931457, epsilon = 1e-12);
        assert_abs_diff_eq!(poker_score(0.5, 0.1, 0.5, 0.1, 10.0), 0.65866, epsilon = 1e-5);
    }

    #[test]
    fn poker_exploits_at_horizon() {
        let mut p = Poker::new(3, 50).unwrap();
        for (a, r) in [(0, 0.2), (1, 0.9), (2, 0.5), (0, 0.4)] {
            p.observe(&StepContext::at(1), &[ArmId(a)], &[r]).unwrap();
        }
        assert_eq!(p.scores(50), vec![0.30000000000000004, 0.9, 0.5]);
    }

    #[test]
    fn besa_duel_rules() {
        let mut rng = RngStream::new(5, 0);
        assert_eq!(besa_duel(ArmId(0), &[0.8, 0.8], ArmId(1), &[0.2, 0.2], &mut rng), ArmId(0));
        for _ in 0..100 {
            assert_eq!(besa_duel(ArmId(0), &[1.0; 4], ArmId(1), &[1.0], &mut rng), ArmId(1));
        }
        let f = freq(10_000, || besa_duel(ArmId(0), &[0.5], ArmId(1), &[0.5], &mut rng) == ArmId(0));
        assert!((f - 0.5).abs() < 0.02);
    }

    #[test]
    fn besa_equal_lengths_do_not_consume_randomness() {
        let mut a = RngStream::new(6, 0);
        let b = a.clone();
        besa_duel(ArmId(0), &[0.1, 0.9], ArmId(1), &[0.3, 0.4], &mut a);
        assert_eq!(a.uniform(), b.clone().uniform());
    }

    #[test]
    fn besa_tournament_trivial_sizes() {
        let mut rng = RngStream::new(7, 0);
        assert_eq!(besa_tournament(&[vec![0.3]], &mut rng).unwrap(), ArmId(0));
        let h = vec![vec![0.1, 0.1], vec![0.9, 0.9]];
        assert_eq!(besa_tournament(&h, &mut rng).unwrap(), ArmId(1));
    }

    #[test]
    fn policies_learn() {
        let means = [0.3, 0.8];
        let mut policies: Vec<Box<dyn Policy>> = vec![
            Box::new(ThompsonSampling::new(2, PriorSpec::default()).unwrap()),
            Box::new(ThompsonSampling::optimistic(2, PriorSpec::default()).unwrap()),
            Box::new(Poker::new(2, 3000).unwrap()),
            Box::new(Besa::new(2).unwrap()),
        ];
        for p in &mut policies {
            let mut rng = RngStream::new(9, 0);
            let mut env = RngStream::new(9, 1);
            let mut best = 0;
            for t in 1..=3000 {
                let step = StepContext::at(t);
                let arm = p.select(&step, &mut rng).unwrap().arm();
                best += usize::from(arm.0 == 1);
                let r = if env.uniform() < means[arm.0] { 1.0 } else { 0.0 };
                p.observe(&step, &[arm], &[r]).unwrap();
            }
            assert!(best > 2700, "{} played the best arm {best} times", p.name());
        }
    }
}
