//! Linear contextual policies built on an incremental ridge regression:
//! LinUCB, LinTS, and a weighted-least-squares fit with decaying weights for
//! drifting problems.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{check_arms, single_observation};
use crate::error::{check_finite, invalid, BanditError, Result};
use crate::log::PolicyDecision;
use crate::policy::{Policy, StepContext};
use crate::rng::RngStream;
use crate::stats::{argmax_tiebreak, ArmId};

/// `A = sum w x x' + lambda I`, `b = sum w x y`, plus what the residual
/// variance needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeState {
    lambda: f64,
    a: DMatrix<f64>,
    b: DVector<f64>,
    /// `sum w y^2`.
    syy: f64,
    n: u64,
}

impl RidgeState {
    pub fn new(d: usize, lambda: f64) -> Result<Self> {
        if d == 0 {
            return Err(BanditError::Empty("ridge dimension"));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(invalid("lambda", lambda, "must be > 0"));
        }
        Ok(Self {
            lambda,
            a: DMatrix::identity(d, d) * lambda,
            b: DVector::zeros(d),
            syy: 0.0,
            n: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.a
    }

    fn check_x(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(BanditError::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        x.iter().try_for_each(|&v| check_finite("ridge feature", v).map(|_| ()))
    }

    pub fn update(&mut self, x: &[f64], y: f64) -> Result<()> {
        self.update_weighted(x, y, 1.0)
    }

    pub fn update_weighted(&mut self, x: &[f64], y: f64, w: f64) -> Result<()> {
        self.check_x(x)?;
        check_finite("ridge response", y)?;
        if !(w >= 0.0 && w.is_finite()) {
            return Err(invalid("weight", w, "must be finite and >= 0"));
        }
        let d = self.dim();
        for i in 0..d {
            let wxi = w * x[i];
            for (j, xj) in x.iter().enumerate() {
                self.a[(i, j)] += wxi * xj;
            }
            self.b[i] += wxi * y;
        }
        self.syy += w * y * y;
        self.n += 1;
        Ok(())
    }

    /// Multiply every accumulated observation's weight by `factor`.
    pub fn decay(&mut self, factor: f64) {
        let d = self.dim();
        for i in 0..d {
            for j in 0..d {
                let prior = if i == j { self.lambda } else { 0.0 };
                self.a[(i, j)] = prior + (self.a[(i, j)] - prior) * factor;
            }
        }
        self.b *= factor;
        self.syy *= factor;
    }

    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.a
            .clone()
            .cholesky()
            .expect("ridge Gram matrix is positive definite for lambda > 0")
            .solve(rhs)
    }

    /// `theta = A^-1 b`.
    pub fn theta(&self) -> Vec<f64> {
        self.solve(&self.b).iter().copied().collect()
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        self.check_x(x)?;
        Ok(self.theta().iter().zip(x).map(|(t, v)| t * v).sum())
    }

    /// `x' A^-1 x`.
    pub fn quad_form(&self, x: &[f64]) -> Result<f64> {
        self.check_x(x)?;
        let xv = DVector::from_column_slice(x);
        Ok(xv.dot(&self.solve(&xv)).max(0.0))
    }

    /// Residual mean square `RSS / (n - d)`, floored at `1e-6`; 1 until there
    /// are two residual degrees of freedom.
    pub fn sigma2(&self) -> f64 {
        let d = self.dim() as u64;
        if self.n < d + 2 {
            return 1.0;
        }
        let theta = self.solve(&self.b);
        let xtx = &self.a - DMatrix::identity(self.dim(), self.dim()) * self.lambda;
        let rss = self.syy - 2.0 * theta.dot(&self.b) + theta.dot(&(&xtx * &theta));
        (rss / (self.n - d) as f64).max(1e-6)
    }
}

/// `theta' x + alpha sqrt(x' A^-1 x)`.
pub fn linucb_score(state: &RidgeState, x: &[f64], alpha: f64) -> Result<f64> {
    Ok(state.predict(x)? + alpha * state.quad_form(x)?.sqrt())
}

/// One draw from `Normal(theta' x, sqrt(sigma^2 x' A^-1 x))`.
pub fn lints_sample(state: &RidgeState, x: &[f64], rng: &mut RngStream) -> Result<f64> {
    let mean = state.predict(x)?;
    let sd = (state.sigma2() * state.quad_form(x)?).sqrt();
    let z: f64 = StandardNormal.sample(rng);
    Ok(mean + sd * z)
}

/// Weighted ridge fit of `(x, y, w)` triples.
pub fn wls_fit(data: &[(Vec<f64>, f64, f64)], d: usize, lambda: f64) -> Result<RidgeState> {
    let mut s = RidgeState::new(d, lambda)?;
    for (x, y, w) in data {
        s.update_weighted(x, *y, *w)?;
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DecayKind {
    /// `1 / (c max(age, 1))`.
    Linear { c: f64 },
    /// `1 / c^age`.
    Exponential { c: f64 },
}

impl DecayKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DecayKind::Linear { c } if !(c > 0.0) => Err(invalid("c", c, "linear decay needs c > 0")),
            DecayKind::Exponential { c } if !(c > 1.0) => Err(invalid("c", c, "exponential decay needs c > 1")),
            _ => Ok(()),
        }
    }
}

pub fn decay_weight(kind: DecayKind, age: u64) -> f64 {
    match kind {
        DecayKind::Linear { c } => 1.0 / (c * age.max(1) as f64),
        DecayKind::Exponential { c } => c.powf(-(age as f64)),
    }
}

/// How a world context and an arm become a regression row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureMap {
    /// One ridge model per arm over the raw context.
    #[default]
    Disjoint,
    /// A single shared model over `K` arm dummies followed by `K d`
    /// arm-by-context interaction columns.
    Interaction,
}

impl FeatureMap {
    fn models(self, arms: usize) -> usize {
        match self {
            FeatureMap::Disjoint => arms,
            FeatureMap::Interaction => 1,
        }
    }

    fn dim(self, arms: usize, d: usize) -> usize {
        match self {
            FeatureMap::Disjoint => d,
            FeatureMap::Interaction => arms * (d + 1),
        }
    }

    /// `(model index, feature row)` for `arm` under `context`.
    pub fn encode(self, arms: usize, arm: usize, context: &[f64]) -> (usize, Vec<f64>) {
        match self {
            FeatureMap::Disjoint => (arm, context.to_vec()),
            FeatureMap::Interaction => {
                let d = context.len();
                let mut row = vec![0.0; arms * (d + 1)];
                row[arm] = 1.0;
                row[arms + arm * d..arms + (arm + 1) * d].copy_from_slice(context);
                (0, row)
            }
        }
    }
}

/// Context for this step; a constant `[1]` for non-contextual problems, which
/// turns every model into a per-arm (weighted) mean.
fn context_of<'a>(step: &StepContext<'a>, d: usize) -> Result<std::borrow::Cow<'a, [f64]>> {
    match step.context {
        Some(x) if x.len() == d => Ok(std::borrow::Cow::Borrowed(x)),
        Some(x) => Err(BanditError::Dimension {
            expected: d,
            got: x.len(),
        }),
        None if d == 1 => Ok(std::borrow::Cow::Owned(vec![1.0])),
        None => Err(BanditError::Unsupported("contextual policy needs a context".into())),
    }
}

#[derive(Debug, Clone)]
struct LinearModels {
    arms: usize,
    d: usize,
    map: FeatureMap,
    models: Vec<RidgeState>,
}

impl LinearModels {
    fn new(arms: usize, d: usize, lambda: f64, map: FeatureMap) -> Result<Self> {
        check_arms(arms)?;
        let dim = map.dim(arms, d);
        let models = (0..map.models(arms))
            .map(|_| RidgeState::new(dim, lambda))
            .collect::<Result<_>>()?;
        Ok(Self { arms, d, map, models })
    }

    fn observe(&mut self, step: &StepContext<'_>, arms: &[ArmId], rewards: &[f64]) -> Result<()> {
        let (i, r) = single_observation(arms, rewards, self.arms)?;
        let x = context_of(step, self.d)?;
        let (m, row) = self.map.encode(self.arms, i, &x);
        self.models[m].update(&row, r)
    }

    fn score_all(&self, step: &StepContext<'_>, mut f: impl FnMut(&RidgeState, &[f64]) -> Result<f64>) -> Result<Vec<f64>> {
        let x = context_of(step, self.d)?;
        (0..self.arms)
            .map(|i| {
                let (m, row) = self.map.encode(self.arms, i, &x);
                f(&self.models[m], &row)
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct LinUcb {
    alpha: f64,
    inner: LinearModels,
}

impl LinUcb {
    pub fn new(arms: usize, d: usize, alpha: f64, lambda: f64, map: FeatureMap) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(invalid("alpha", alpha, "must be finite and >= 0"));
        }
        Ok(Self {
            alpha,
            inner: LinearModels::new(arms, d, lambda, map)?,
        })
    }

    pub fn models(&self) -> &[RidgeState] {
        &self.inner.models
    }
}

impl Policy for LinUcb {
    fn name(&self) -> &'static str {
        "linucb"
    }

    fn num_arms(&self) -> usize {
        self.inner.arms
    }

    fn select(&mut self, step: &StepContext<'_>, rng: &mut RngStream) -> Result<PolicyDecision> {
        let scores = self.inner.score_all(step, |m, x| linucb_score(m, x, self.alpha))?;
        Ok(PolicyDecision::with_scores(argmax_tiebreak(&scores, rng)?, scores))
    }

    fn observe(&mut self, step: &StepContext<'_>, arms: &[ArmId], rewards: &[f64]) -> Result<()> {
        self.inner.observe(step, arms, rewards)
    }
}

#[derive(Debug, Clone)]
pub struct LinTs {
    inner: LinearModels,
}

impl LinTs {
    pub fn new(arms: usize, d: usize, lambda: f64, map: FeatureMap) -> Result<Self> {
        Ok(Self {
            inner: LinearModels::new(arms, d, lambda, map)?,
        })
    }
}

impl Policy for LinTs {
    fn name(&self) -> &'static str {
        "lints"
    }

    fn num_arms(&self) -> usize {
        self.inner.arms
    }

    fn select(&mut self, step: &StepContext<'_>, rng: &mut RngStream) -> Result<PolicyDecision> {
        let scores = self.inner.score_all(step, |m, x| lints_sample(m, x, rng))?;
        Ok(PolicyDecision::with_scores(argmax_tiebreak(&scores, rng)?, scores))
    }

    fn observe(&mut self, step: &StepContext<'_>, arms: &[ArmId], rewards: &[f64]) -> Result<()> {
        self.inner.observe(step, arms, rewards)
    }
}

/// Weighted least squares with age-decayed weights, scored LinUCB-style
/// (`alpha = 0` is greedy).
///
/// Age is counted in units of `time_unit` trials, so `time_unit = 1` is
/// trial-count time and larger values approximate calendar time with that
/// many trials per period. Exponential decay updates in place; linear decay
/// refits from the retained history each step.
#[derive(Debug, Clone)]
pub struct WlsDecay {
    arms: usize,
    d: usize,
    map: FeatureMap,
    lambda: f64,
    alpha: f64,
    decay: DecayKind,
    time_unit: u64,
    history: Vec<(usize, Vec<f64>, f64, u64)>,
    models: Vec<RidgeState>,
    fitted_period: u64,
}

impl WlsDecay {
    pub fn new(arms: usize, d: usize, lambda: f64, alpha: f64, decay: DecayKind, time_unit: u64, map: FeatureMap) -> Result<Self> {
        decay.validate()?;
        if time_unit == 0 {
            return Err(invalid("time_unit", 0.0, "must be >= 1"));
        }
        let models = LinearModels::new(arms, d, lambda, map)?.models;
        Ok(Self {
            arms,
            d,
            map,
            lambda,
            alpha,
            decay,
            time_unit,
            history: Vec::new(),
            models,
            fitted_period: 0,
        })
    }

    fn period(&self, t: u64) -> u64 {
        (t - 1) / self.time_unit
    }

    /// Bring the fitted models to the period containing step `t`.
    fn refresh(&mut self, t: u64) -> Result<()> {
        let now = self.period(t);
        match self.decay {
            DecayKind::Exponential { c } => {
                if now > self.fitted_period {
                    let factor = c.powf(-((now - self.fitted_period) as f64));
                    self.models.iter_mut().for_each(|m| m.decay(factor));
                }
            }
            DecayKind::Linear { .. } => {
                let dim = self.map.dim(self.arms, self.d);
                let mut models: Vec<RidgeState> = (0..self.map.models(self.arms))
                    .map(|_| RidgeState::new(dim, self.lambda))
                    .collect::<Result<_>>()?;
                for (arm, x, y, tt) in &self.history {
                    let w = decay_weight(self.decay, now - self.period(*tt));
                    let (m, row) = self.map.encode(self.arms, *arm, x);
                    models[m].update_weighted(&row, *y, w)?;
                }
                self.models = models;
            }
        }
        self.fitted_period = now;
        Ok(())
    }
}

impl Policy for WlsDecay {
    fn name(&self) -> &'static str {
        "wls-decay"
    }

    fn num_arms(&self) -> usize {
        self.arms
    }

    fn select(&mut self, step: &StepContext<'_>, rng: &mut RngStream) -> Result<PolicyDecision> {
        self.refresh(step.t)?;
        let x = context_of(step, self.d)?;
        let scores = (0..self.arms)
            .map(|i| {
                let (m, row) = self.map.encode(self.arms, i, &x);
                linucb_score(&self.models[m], &row, self.alpha)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PolicyDecision::with_scores(argmax_tiebreak(&scores, rng)?, scores))
    }

    fn observe(&mut self, step: &StepContext<'_>, arms: &[ArmId], rewards: &[f64]) -> Result<()> {
        let (i, r) = single_observation(arms, rewards, self.arms)?;
        let x = context_of(step, self.d)?.into_owned();
        self.refresh(step.t)?;
        match self.decay {
            DecayKind::Exponential { .. } => {
                let (m, row) = self.map.encode(self.arms, i, &x);
                self.models[m].update(&row, r)?;
            }
            DecayKind::Linear { .. } => self.history.push((i, x, r, step.t)),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn fresh_state_predicts_zero() {
        let s = RidgeState::new(3, 1.0).unwrap();
        assert_eq!(s.theta(), vec![0.0; 3]);
    }

    #[test]
    fn one_dimensional_closed_form() {
        let mut s = RidgeState::new(1, 0.001).unwrap();
        for _ in 0..100 {
            s.update(&[1.0], 1.0).unwrap();
        }
        assert_abs_diff_eq!(s.theta()[0], 100.0 / 100.001, epsilon = 1e-12);
    }

    #[test]
    fn orthogonal_blocks_are_independent() {
        let mut s = RidgeState::new(2, 1.0).unwrap();
        s.update(&[1.0, 0.0], 3.0).unwrap();
        assert_eq!(s.theta()[1], 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut s = RidgeState::new(2, 1.0).unwrap();
        assert!(s.update(&[1.0, f64::NAN], 1.0).is_err());
        assert!(s.update(&[1.0], 1.0).is_err());
        assert!(s.update(&[1.0, 0.0], f64::INFINITY).is_err());
        assert!(RidgeState::new(2, 0.0).is_err());
    }

    #[test]
    fn linucb_values() {
        let mut s = RidgeState::new(2, 1.0).unwrap();
        assert_eq!(linucb_score(&s, &[0.6, 0.8], 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(linucb_score(&s, &[0.6, 0.8], 0.7).unwrap(), 0.7, epsilon = 1e-12);
        // theta = [1, 0] with A = I is not reachable by updates; evaluate the formula.
        let theta = [1.0, 0.0];
        let x: [f64; 2] = [0.5, 0.5];
        let direct = theta[0] * x[0] + 0.1 * (x[0] * x[0] + x[1] * x[1]).sqrt();
        assert_abs_diff_eq!(direct, 0.570711, epsilon = 1e-6);
        s.update(&[1.0, 0.0], 2.0).unwrap();
        assert_eq!(linucb_score(&s, &[1.0, 0.0], 0.0).unwrap(), s.predict(&[1.0, 0.0]).unwrap());
    }

    #[test]
    fn lints_zero_feature_is_exact() {
        let mut s = RidgeState::new(2, 1.0).unwrap();
        s.update(&[1.0, 0.5], 1.0).unwrap();
        let mut rng = RngStream::new(1, 0);
        assert_eq!(lints_sample(&s, &[0.0, 0.0], &mut rng).unwrap(), 0.0);
    }

    #[test]
    fn lints_sample_moments() {
        let mut s = RidgeState::new(2, 1.0).unwrap();
        let mut rng = RngStream::new(2, 0);
        for i in 0..20 {
            let x = [1.0, (i as f64) / 10.0];
            s.update(&x, 0.3 + 0.5 * x[1] + if i % 2 == 0 { 0.1 } else { -0.1 }).unwrap();
        }
        let x = [1.0, 0.4];
        let mean = s.predict(&x).unwrap();
        let sd = (s.sigma2() * s.quad_form(&x).unwrap()).sqrt();
        let n = 100_000;
        let avg: f64 = (0..n).map(|_| lints_sample(&s, &x, &mut rng).unwrap()).sum::<f64>() / n as f64;
        assert!((avg - mean).abs() < 3.0 * sd / (n as f64).sqrt());
    }

    #[test]
    fn wls_values() {
        let data = vec![(vec![1.0], 2.0, 1.0), (vec![0.5], 1.0, 1.0)];
        let mut fold = RidgeState::new(1, 1.0).unwrap();
        for (x, y, _) in &data {
            fold.update(x, *y).unwrap();
        }
        assert_eq!(wls_fit(&data, 1, 1.0).unwrap(), fold);

        let contradictory = vec![(vec![1.0], 0.0, 1.0), (vec![1.0], 1.0, 3.0)];
        assert_abs_diff_eq!(wls_fit(&contradictory, 1, 1e-12).unwrap().theta()[0], 0.75, epsilon = 1e-9);

        let base = vec![(vec![1.0, 0.2], 0.4, 1.0), (vec![0.3, 1.0], 0.9, 1.0), (vec![0.7, 0.7], 0.1, 1.0)];
        let mut perturbed = base.clone();
        perturbed.push((vec![1.0, 1.0], 100.0, 1e-12));
        let a = wls_fit(&base, 2, 1.0).unwrap().theta();
        let b = wls_fit(&perturbed, 2, 1.0).unwrap().theta();
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-6);
        }
    }

    #[test]
    fn decay_values() {
        assert_eq!(decay_weight(DecayKind::Exponential { c: 2.0 }, 0), 1.0);
        assert_eq!(decay_weight(DecayKind::Linear { c: 1.0 }, 1), 1.0);
        assert_eq!(decay_weight(DecayKind::Linear { c: 1.0 }, 0), 1.0);
        assert_eq!(decay_weight(DecayKind::Exponential { c: 2.0 }, 3), 0.125);
        assert!(DecayKind::Exponential { c: 1.0 }.validate().is_err());
    }

    #[test]
    fn exponential_in_place_decay_matches_refit() {
        let mut p = WlsDecay::new(1, 1, 1.0, 0.0, DecayKind::Exponential { c: 2.0 }, 1, FeatureMap::Disjoint).unwrap();
        let ys = [0.2, 0.9, 0.4, 0.7];
        for (t, y) in ys.iter().enumerate() {
            p.observe(&StepContext::at(t as u64 + 1), &[ArmId(0)], &[*y]).unwrap();
        }
        p.refresh(5).unwrap();
        let data: Vec<_> = ys.iter().enumerate().map(|(i, y)| (vec![1.0], *y, 0.5f64.powi(4 - i as i32))).collect();
        let refit = wls_fit(&data, 1, 1.0).unwrap();
        assert_abs_diff_eq!(p.models[0].theta()[0], refit.theta()[0], epsilon = 1e-12);
    }

    #[test]
    fn interaction_encoding() {
        let (m, row) = FeatureMap::Interaction.encode(3, 1, &[0.5, -1.0]);
        assert_eq!(m, 0);
        assert_eq!(row, vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.5, -1.0, 0.0, 0.0]);
    }

    #[test]
    fn linucb_learns_linear_rewards() {
        let theta = [[1.0, 0.0], [0.0, 1.0]];
        for map in [FeatureMap::Disjoint, FeatureMap::Interaction] {
            let mut p = LinUcb::new(2, 2, 0.5, 1.0, map).unwrap();
            let mut rng = RngStream::new(5, 0);
            let mut env = RngStream::new(5, 1);
            let mut correct = 0;
            for t in 1..=2000 {
                let a: f64 = env.uniform() * std::f64::consts::FRAC_PI_2;
                let x = [a.cos(), a.sin()];
                let step = StepContext::with_context(t, &x);
                let arm = p.select(&step, &mut rng).unwrap().arm();
                let best = usize::from(x[1] > x[0]);
                if t > 1000 {
                    correct += usize::from(arm.0 == best);
                }
                let r = theta[arm.0][0] * x[0] + theta[arm.0][1] * x[1];
                p.observe(&step, &[arm], &[r]).unwrap();
            }
            assert!(correct > 950, "{map:?}: {correct}");
        }
    }
}
