//! Closed-form regret bounds used as verification targets.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use super::config::{Metric, PolicySpec};
use crate::env::Environment;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BoundSpec {
    /// `8 sum_{Δ>0} ln t / Δ_i + (1 + π²/3) sum Δ_i`.
    Ucb1,
    /// `sum_{Δ>0} ((1+α)(1+4α) ln(2e Δ² t) / (2Δ) + c_α / Δ)`, valid for
    /// `t >= max 1/(2Δ²)`.
    Ucb2 { alpha: f64 },
    /// `min(25 sqrt(tK), (23K/Δ) ln max(140 t Δ² / K, 1e4))` with `Δ` the
    /// smallest positive gap.
    Moss,
    /// `c ln t`.
    GenericLog { c: f64 },
    /// `c sqrt(K t ln K)`; compared with weak regret on adversarial tables.
    GenericSqrt { c: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Below,
    Above,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub bound: BoundSpec,
    pub metric: Metric,
    pub bound_value: Option<f64>,
    pub observed: Option<f64>,
    pub verdict: Verdict,
}

/// `1 + (1+α)e/α² + ((1+α)/α)^(1+α) (1 + 11(1+α) / (5α² ln(1+α)))`.
pub fn c_alpha(alpha: f64) -> f64 {
    let a1 = 1.0 + alpha;
    1.0 + a1 * E / (alpha * alpha) + (a1 / alpha).powf(a1) * (1.0 + 11.0 * a1 / (5.0 * alpha * alpha * a1.ln()))
}

impl BoundSpec {
    pub fn validate(&self) -> Result<(), String> {
        match *self {
            BoundSpec::Ucb2 { alpha } if !(alpha > 0.0 && alpha < 1.0) => Err(format!("ucb2 bound: alpha {alpha} must lie in (0, 1)")),
            BoundSpec::GenericLog { c } | BoundSpec::GenericSqrt { c } if !(c > 0.0 && c.is_finite()) => {
                Err(format!("bound constant {c} must be finite and > 0"))
            }
            _ => Ok(()),
        }
    }

    /// The metric the bound is compared against.
    pub fn metric(&self, env: &Environment) -> Metric {
        match self {
            BoundSpec::GenericSqrt { .. } if env.is_adversarial() => Metric::Weak,
            _ => Metric::Ee,
        }
    }

    /// The bound chosen by default for a policy, if it has one.
    pub fn default_for(policy: &PolicySpec) -> Option<Self> {
        match policy {
            PolicySpec::Ucb1 {} => Some(BoundSpec::Ucb1),
            PolicySpec::Ucb2 { alpha } => Some(BoundSpec::Ucb2 { alpha: *alpha }),
            PolicySpec::Moss {} => Some(BoundSpec::Moss),
            _ => None,
        }
    }
}

/// Value of `bound` at step `t`, or `None` where it does not apply.
pub fn evaluate_bound(bound: &BoundSpec, env: &Environment, t: u64) -> Option<f64> {
    let tf = t as f64;
    if let BoundSpec::GenericSqrt { c } = bound {
        let k = env.num_arms()? as f64;
        return Some(c * (k * tf * k.ln()).sqrt());
    }
    let gaps = env.stationary_gaps()?;
    let positive: Vec<f64> = gaps.iter().copied().filter(|&g| g > 0.0).collect();
    match *bound {
        BoundSpec::Ucb1 => Some(
            8.0 * positive.iter().map(|g| tf.ln() / g).sum::<f64>()
                + (1.0 + PI * PI / 3.0) * gaps.iter().sum::<f64>(),
        ),
        BoundSpec::Ucb2 { alpha } => {
            let min_t = positive.iter().map(|g| 1.0 / (2.0 * g * g)).fold(0.0, f64::max);
            if tf < min_t {
                return None;
            }
            let ca = c_alpha(alpha);
            Some(
                positive
                    .iter()
                    .map(|g| {
                        (1.0 + alpha) * (1.0 + 4.0 * alpha) * (2.0 * E * g * g * tf).ln() / (2.0 * g) + ca / g
                    })
                    .sum(),
            )
        }
        BoundSpec::Moss => {
            let k = gaps.len() as f64;
            let minimax = 25.0 * (tf * k).sqrt();
            match positive.iter().copied().reduce(f64::min) {
                None => Some(minimax),
                Some(d) => Some(minimax.min(23.0 * k / d * (140.0 * tf * d * d / k).max(1e4).ln())),
            }
        }
        BoundSpec::GenericLog { c } => Some(c * tf.ln()),
        BoundSpec::GenericSqrt { .. } => unreachable!(),
    }
}

/// Compare an observed mean regret with a bound.
pub fn check(bound: BoundSpec, env: &Environment, t: u64, observed: Option<f64>) -> BoundCheck {
    let value = evaluate_bound(&bound, env, t);
    let verdict = match (value, observed) {
        (Some(b), Some(o)) if o < b => Verdict::Below,
        (Some(_), Some(_)) => Verdict::Above,
        _ => Verdict::NotApplicable,
    };
    BoundCheck {
        bound,
        metric: bound.metric(env),
        bound_value: value,
        observed,
        verdict,
    }
}
