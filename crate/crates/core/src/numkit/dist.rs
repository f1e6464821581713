//! Univariate distribution functions needed for calibration.

use statrs::function::erf::{erfc, erfc_inv};
use statrs::function::gamma::{gamma_lr, gamma_ur};

use crate::error::{McvError, Result};

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile for `p` in `(0, 1)`.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(McvError::Probability(p));
    }
    Ok(-std::f64::consts::SQRT_2 * erfc_inv(2.0 * p))
}

/// Chi-square CDF with `df` degrees of freedom.
pub fn chisq_cdf(x: f64, df: usize) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x.is_infinite() {
        1.0
    } else {
        gamma_lr(df as f64 / 2.0, x / 2.0)
    }
}

/// Upper tail `P(χ²_df ≥ x)`, evaluated directly to keep precision for large `x`.
pub fn chisq_sf(x: f64, df: usize) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x.is_infinite() {
        0.0
    } else {
        gamma_ur(df as f64 / 2.0, x / 2.0)
    }
}

/// Chi-square quantile by bracketed bisection on the regularized lower
/// incomplete gamma function; absolute accuracy better than 1e-10.
pub fn chisq_quantile(p: f64, df: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&p) {
        return Err(McvError::Probability(p));
    }
    if df == 0 {
        return Err(McvError::InvalidArgument("chi-square needs df >= 1".into()));
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = df as f64 + 10.0;
    while chisq_cdf(hi, df) < p {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-12 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if chisq_cdf(mid, df) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
