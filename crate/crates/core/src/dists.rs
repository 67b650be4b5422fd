//! Special functions and distribution primitives shared by the likelihoods.
//!
//! The error function is evaluated from a positive-term power series below
//! |x| = 2.5 and a continued fraction for erfc above it; both are accurate to
//! a few ulps, so the seam between them is invisible to finite differences.
//! Log-gamma comes from `statrs` (Lanczos).

use std::f64::consts::{FRAC_2_SQRT_PI, PI, SQRT_2};

use crate::error::{ensure_positive, Error, Result};

/// Lower clamp applied to CDF-type probabilities.
pub const CDF_FLOOR: f64 = 1e-300;
/// Upper clamp applied to CDF-type probabilities.
pub const CDF_CEIL: f64 = 1.0 - 1e-16;

fn clamp_probability(p: f64) -> f64 {
    p.clamp(CDF_FLOOR, CDF_CEIL)
}

/// Crossover between the series and the continued fraction.
const ERF_SPLIT: f64 = 2.5;

/// `erf(x)` for `0 <= x <= ERF_SPLIT` from the positive-term series
/// `(2/sqrt(pi)) e^{-x^2} sum_n 2^n x^{2n+1} / (2n+1)!!`.
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    while term > sum * 1e-17 {
        n += 1.0;
        term *= 2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
    }
    FRAC_2_SQRT_PI * (-x2).exp() * sum
}

/// `erfc(x)` for `x >= ERF_SPLIT` from the continued fraction
/// `e^{-x^2}/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))`,
/// evaluated bottom-up.
fn erfc_continued_fraction(x: f64) -> f64 {
    let mut t = x;
    for n in (1..=100).rev() {
        t = x + 0.5 * n as f64 / t;
    }
    (-x * x).exp() / (t * PI.sqrt())
}

/// Gauss error function. Odd by construction.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return x;
    }
    let a = x.abs();
    let v = if a <= ERF_SPLIT {
        erf_series(a)
    } else {
        1.0 - erfc_continued_fraction(a)
    };
    v.copysign(x)
}

/// Complementary error function, `1 - erf(x)` without cancellation.
pub fn erfc(x: f64) -> f64 {
    if x >= ERF_SPLIT {
        erfc_continued_fraction(x)
    } else {
        1.0 - erf(x)
    }
}

/// `d/dx erf(x) = (2/sqrt(pi)) exp(-x^2)`.
pub fn erf_deriv(x: f64) -> f64 {
    FRAC_2_SQRT_PI * (-x * x).exp()
}

/// Normal CDF with location `mu` and scale `sigma`.
pub fn gaussian_cdf(x: f64, mu: f64, sigma: f64) -> Result<f64> {
    ensure_positive("sigma", sigma)?;
    let z = (x - mu) / (sigma * SQRT_2);
    // 0.5 * (1 + erf(z)), evaluated through erfc on the lower tail.
    let p = if z < 0.0 {
        0.5 * erfc(-z)
    } else {
        0.5 * (1.0 + erf(z))
    };
    Ok(clamp_probability(p))
}

/// Standard logistic sigmoid, stable for large `|t|`.
pub fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `log(sum(exp(v)))` with max subtraction.
pub fn log_sum_exp(v: &[f64]) -> Result<f64> {
    let max = v
        .iter()
        .copied()
        .fold(None, |acc: Option<f64>, x| {
            Some(acc.map_or(x, |m| m.max(x)))
        })
        .ok_or(Error::Empty("log_sum_exp"))?;
    if max.is_infinite() {
        return Ok(max);
    }
    let sum: f64 = v.iter().map(|&x| (x - max).exp()).sum();
    Ok(max + sum.ln())
}

/// Cauchy CDF with location `a` and scale `b`.
pub fn cauchy_cdf(x: f64, a: f64, b: f64) -> Result<f64> {
    ensure_positive("b", b)?;
    Ok(clamp_probability(((x - a) / b).atan() / PI + 0.5))
}

/// Natural log of the gamma function.
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// `ln P(K = k)` for `K ~ Poisson(lambda)`.
pub fn poisson_log_pmf(k: u64, lambda: f64) -> Result<f64> {
    ensure_positive("lambda", lambda)?;
    let k = k as f64;
    Ok(k * lambda.ln() - lambda - ln_gamma(k + 1.0))
}
