//! Special functions and root finding shared by the index policies.

use statrs::function::{beta::beta_reg, erf::erfc_inv};

/// Absolute tolerance used by every bisection in the crate.
pub const BISECTION_TOL: f64 = 1e-9;

/// Largest `x` in `[lo, hi]` with `pred(x)` true, assuming `pred` holds on a
/// prefix of the interval and `pred(lo)` is true.
pub fn bisect_last_true(mut lo: f64, mut hi: f64, tol: f64, pred: impl Fn(f64) -> bool) -> f64 {
    if pred(hi) {
        return hi;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// `x ln(x / y)` with the conventions `0 ln(0/y) = 0` and `x ln(x/0) = +inf`.
fn xlogx_over_y(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if y == 0.0 {
        f64::INFINITY
    } else {
        x * (x / y).ln()
    }
}

/// Bernoulli Kullback-Leibler divergence `d(p, q)`.
pub fn kl_div_bernoulli(p: f64, q: f64) -> f64 {
    xlogx_over_y(p, q) + xlogx_over_y(1.0 - p, 1.0 - q)
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// `P[X >= x]` for `X ~ Normal(mean, sd)`; a step function when `sd = 0`.
pub fn normal_upper_tail(x: f64, mean: f64, sd: f64) -> f64 {
    if sd > 0.0 {
        0.5 * libm::erfc((x - mean) / (sd * std::f64::consts::SQRT_2))
    } else if mean > x {
        1.0
    } else if mean == x {
        0.5
    } else {
        0.0
    }
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        f64::NEG_INFINITY
    } else if p >= 1.0 {
        f64::INFINITY
    } else {
        -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
    }
}

pub fn beta_cdf(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        beta_reg(a, b, x)
    }
}

/// `Q(level)` of `Beta(a, b)`, by bisection on the regularized incomplete
/// beta function to [`BISECTION_TOL`].
pub fn beta_quantile(a: f64, b: f64, level: f64) -> f64 {
    if level <= 0.0 {
        return 0.0;
    }
    if level >= 1.0 {
        return 1.0;
    }
    bisect_last_true(0.0, 1.0, BISECTION_TOL, |x| beta_cdf(a, b, x) <= level)
}

/// `E[clamp(X, lo, hi)]` for `X ~ Normal(mu, sigma)`.
pub fn clamped_normal_mean(mu: f64, sigma: f64, lo: f64, hi: f64) -> f64 {
    if sigma == 0.0 {
        return mu.clamp(lo, hi);
    }
    let pdf = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let alpha = (lo - mu) / sigma;
    let beta = (hi - mu) / sigma;
    let (fa, fb) = (normal_cdf(alpha), normal_cdf(beta));
    lo * fa + hi * (1.0 - fb) + mu * (fb - fa) + sigma * (pdf(alpha) - pdf(beta))
}
