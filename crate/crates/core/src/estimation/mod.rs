//! One-sample estimation of the MCV variants and their reciprocals
//! (standardized means), with delta-method asymptotic variances.
//!
//! Two routes compute the same variance estimate:
//!
//! * [`asymptotic_variance`] forms the quadratic form `(S_v/4)·A_v·M·A_vᵀ`
//!   explicitly from a [`MomentSet`], where `M` is the joint covariance of
//!   `(X, vec XXᵀ)` built from `Σ̂`, `Ψ̂3` and `Ψ̂4`.
//! * [`estimate`] (and the resampling engines) use the fact that `M` is itself
//!   an empirical covariance, so the quadratic form equals the empirical
//!   variance of the linearised statistic over the observations. This costs
//!   `O(n·d²)` instead of `O(n·d⁴)` and is nonnegative by construction.

mod moments;
mod variant;

use serde::{Deserialize, Serialize};

pub use moments::{dtilde, sample_moments, IndexedRows, MomentSet, Rows, Sample};
pub use variant::{a_matrix, mcv, s_factor, McvVariant};

pub(crate) use moments::{covariance_of, mean_of};
pub(crate) use variant::linearize;

use crate::error::{McvError, Result};
use crate::numkit::normal_quantile;
use crate::scalar::Scalar;

/// Quadratic forms may dip below zero by rounding; anything below this is an error.
pub const NEGATIVE_VARIANCE_TOL: f64 = -1e-10;

/// Point estimates and asymptotic variances for one sample and one variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult<T> {
    pub variant: McvVariant,
    pub n: usize,
    /// `Ĉ`
    pub c: T,
    /// `B̂ = 1/Ĉ`
    pub b: T,
    /// Asymptotic variance of `√n(Ĉ − C)`.
    pub var_c: T,
    /// Asymptotic variance of `√n(B̂ − B)`, equal to `Ĉ⁻⁴·var_c`.
    pub var_b: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval<T> {
    pub lower: T,
    pub upper: T,
}

impl<T: Scalar> Interval<T> {
    pub fn centered(center: T, half_width: T) -> Self {
        Self { lower: center - half_width, upper: center + half_width }
    }

    pub fn contains(&self, x: T) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn width(&self) -> T {
        self.upper - self.lower
    }
}

fn finish<T: Scalar>(variant: McvVariant, n: usize, c: T, var_c: T) -> EstimateResult<T> {
    let c2 = c * c;
    EstimateResult { variant, n, c, b: T::one() / c, var_c, var_b: var_c / (c2 * c2) }
}

/// Explicit delta-method variance `(Ŝ/4)·A·[[Σ̂, Ψ̂3ᵀ], [Ψ̂3, Ψ̂4]]·Aᵀ`.
/// Returns `(var_c, var_b)`.
pub fn asymptotic_variance<T: Scalar>(variant: McvVariant, m: &MomentSet<T>) -> Result<(T, T)> {
    let c = mcv(variant, &m.mean, &m.cov)?;
    let a = a_matrix(variant, &m.mean, &m.cov)?;
    let s = s_factor(variant, c, m.d())?;
    let quad = m.joint_covariance().bilinear(&a, &a);
    let mut var_c = s * quad / T::lit(4.0);
    if var_c < T::zero() {
        if var_c.as_f64() < NEGATIVE_VARIANCE_TOL {
            return Err(McvError::NegativeVariance(var_c.as_f64()));
        }
        var_c = T::zero();
    }
    let r = finish(variant, m.n, c, var_c);
    Ok((r.var_c, r.var_b))
}

/// Estimates from any row source via the linearisation route.
pub(crate) fn estimate_rows<T: Scalar, R: Rows<T>>(variant: McvVariant, x: &R) -> Result<EstimateResult<T>> {
    let n = x.n_rows();
    if n < 2 {
        return Err(McvError::TooFewObservations { n, min: 2 });
    }
    let d = x.dim();
    let mean = mean_of(x);
    let cov = covariance_of(x, &mean);
    let lin = linearize(variant, &mean, &cov)?;
    let w = &lin.grad_cov;
    let offset: T = (0..d).map(|a| crate::numkit::dot(w.row(a), cov.row(a))).sum();
    let mut u = vec![T::zero(); d];
    let mut sum_sq = T::zero();
    for j in 0..n {
        for ((ui, &xi), &mi) in u.iter_mut().zip(x.row(j)).zip(&mean) {
            *ui = xi - mi;
        }
        let infl = crate::numkit::dot(&lin.grad_mean, &u) + w.bilinear(&u, &u) - offset;
        sum_sq += infl * infl;
    }
    let quad = sum_sq / T::from_count(n);
    let factor = lin.c / T::lit(2.0 * f64::from(lin.power));
    Ok(finish(variant, n, lin.c, factor * factor * quad))
}

/// Plug-in estimate `Ĉ`, its reciprocal and both asymptotic variances.
pub fn estimate<T: Scalar>(variant: McvVariant, x: &Sample<T>) -> Result<EstimateResult<T>> {
    if x.n() < x.d() + 2 {
        log::warn!("n = {} < d + 2 = {}: covariance estimate is singular for continuous data", x.n(), x.d() + 2);
    }
    estimate_rows(variant, x)
}

/// Asymptotic `1−α` intervals `[Ĉ ± n^{-1/2}σ̂_C z_{1−α/2}]` and the same for `B̂`.
pub fn one_sample_ci<T: Scalar>(variant: McvVariant, x: &Sample<T>, alpha: f64) -> Result<(Interval<T>, Interval<T>)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(McvError::Probability(alpha));
    }
    let e = estimate(variant, x)?;
    Ok(intervals_for(&e, alpha))
}

pub(crate) fn intervals_for<T: Scalar>(e: &EstimateResult<T>, alpha: f64) -> (Interval<T>, Interval<T>) {
    // alpha already validated; the quantile is finite.
    let z = T::lit(normal_quantile(1.0 - alpha / 2.0).unwrap_or(0.0).max(0.0));
    let root_n = T::from_count(e.n).sqrt();
    (Interval::centered(e.c, e.var_c.sqrt() * z / root_n), Interval::centered(e.b, e.var_b.sqrt() * z / root_n))
}
