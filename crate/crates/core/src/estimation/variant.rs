use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{McvError, Result};
use crate::estimation::moments::dtilde;
use crate::numkit::{dot, vec, Cholesky, Matrix};
use crate::scalar::Scalar;

/// The four multivariate generalisations of the coefficient of variation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum McvVariant {
    /// Reyment: `√(det(Σ)^{1/d} / μᵀμ)`.
    #[serde(rename = "RR")]
    Rr,
    /// Van Valen: `√(tr Σ / μᵀμ)`.
    #[serde(rename = "VV")]
    Vv,
    /// Voinov–Nikulin: `1/√(μᵀΣ⁻¹μ)`.
    #[serde(rename = "VN")]
    Vn,
    /// Albert–Zhang: `√(μᵀΣμ) / μᵀμ`.
    #[serde(rename = "AZ")]
    Az,
}

impl McvVariant {
    pub const ALL: [McvVariant; 4] = [McvVariant::Rr, McvVariant::Vv, McvVariant::Vn, McvVariant::Az];

    pub fn name(self) -> &'static str {
        match self {
            McvVariant::Rr => "RR",
            McvVariant::Vv => "VV",
            McvVariant::Vn => "VN",
            McvVariant::Az => "AZ",
        }
    }
}

impl fmt::Display for McvVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for McvVariant {
    type Err = McvError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rr" => Ok(McvVariant::Rr),
            "vv" => Ok(McvVariant::Vv),
            "vn" => Ok(McvVariant::Vn),
            "az" => Ok(McvVariant::Az),
            other => Err(McvError::InvalidArgument(format!("unknown MCV variant `{other}`"))),
        }
    }
}

/// Each variant is a power of a smooth "inner" functional:
/// `C = f^{1/(2p)}` with `p` given here (RR: `p = d`, VN: `p = −1`).
fn inner_power(variant: McvVariant, d: usize) -> i32 {
    match variant {
        McvVariant::Rr => d as i32,
        McvVariant::Vv | McvVariant::Az => 1,
        McvVariant::Vn => -1,
    }
}

/// Value of a variant together with the gradient of `ln f` in `(μ, Σ)`,
/// holding the other argument fixed. `grad_cov` is the symmetric matrix `W`
/// with `d ln f = ⟨W, dΣ⟩`.
#[derive(Debug, Clone)]
pub(crate) struct Linearization<T> {
    pub c: T,
    /// Inner functional `f` (needed only for the explicit `A_v` route).
    pub f: T,
    pub power: i32,
    pub grad_mean: Vec<T>,
    pub grad_cov: Matrix<T>,
}

fn check_shapes<T: Scalar>(mean: &[T], cov: &Matrix<T>) -> Result<usize> {
    let d = mean.len();
    if d == 0 {
        return Err(McvError::EmptyMatrix);
    }
    if cov.shape() != (d, d) {
        return Err(McvError::DimensionMismatch {
            expected: format!("{d}x{d} covariance"),
            found: format!("{}x{}", cov.rows(), cov.cols()),
        });
    }
    Ok(d)
}

pub(crate) fn linearize<T: Scalar>(variant: McvVariant, mean: &[T], cov: &Matrix<T>) -> Result<Linearization<T>> {
    let d = check_shapes(mean, cov)?;
    let mu2 = dot(mean, mean);
    if !(mu2 > T::min_positive_value()) {
        return Err(McvError::ZeroMean);
    }
    let eps = T::epsilon();
    let two = T::lit(2.0);
    let power = inner_power(variant, d);
    let (f, c, grad_mean, grad_cov) = match variant {
        McvVariant::Rr => {
            let chol = Cholesky::new(cov)?;
            let dd = T::from_count(d);
            let log_f = chol.log_det() - dd * mu2.ln();
            let f = log_f.exp();
            if !(f > T::zero()) || !f.is_finite() {
                return Err(McvError::SingularCovariance);
            }
            let c = (log_f / (two * dd)).exp();
            let grad_mean = mean.iter().map(|&m| -two * dd * m / mu2).collect();
            (f, c, grad_mean, chol.inverse())
        }
        McvVariant::Vv => {
            let tr = cov.trace();
            if !(tr > eps * mu2) {
                return Err(McvError::ZeroTrace);
            }
            let f = tr / mu2;
            let grad_mean = mean.iter().map(|&m| -two * m / mu2).collect();
            (f, f.sqrt(), grad_mean, Matrix::identity(d).scale(T::one() / tr))
        }
        McvVariant::Vn => {
            let chol = Cholesky::new(cov)?;
            let y = chol.solve(mean);
            let f = dot(mean, &y);
            if !(f > T::zero()) {
                return Err(McvError::SingularCovariance);
            }
            let grad_mean = y.iter().map(|&v| two * v / f).collect();
            let w = Matrix::from_fn(d, d, |a, r| -y[a] * y[r] / f);
            (f, T::one() / f.sqrt(), grad_mean, w)
        }
        McvVariant::Az => {
            let sm = cov.mul_vec(mean)?;
            let q = dot(mean, &sm);
            if !(q > eps * mu2 * mu2) {
                return Err(McvError::ZeroQuadraticForm);
            }
            let f = q / (mu2 * mu2);
            let four = T::lit(4.0);
            let grad_mean = mean.iter().zip(&sm).map(|(&m, &s)| -four * m / mu2 + two * s / q).collect();
            let w = Matrix::from_fn(d, d, |a, r| mean[a] * mean[r] / q);
            (f, f.sqrt(), grad_mean, w)
        }
    };
    if !(c > T::zero()) || !c.is_finite() {
        return Err(McvError::SingularCovariance);
    }
    Ok(Linearization { c, f, power, grad_mean, grad_cov })
}

/// Population (or plug-in) value of the chosen variant.
pub fn mcv<T: Scalar>(variant: McvVariant, mean: &[T], cov: &Matrix<T>) -> Result<T> {
    Ok(linearize(variant, mean, cov)?.c)
}

/// The row vector `A_v(μ, Σ)` of length `d + d²`: the gradient of the inner
/// functional `f_v` with respect to `(μ, vec M2)` where `Σ = M2 − μμᵀ`.
/// The first `d` entries form the mean block, the remaining `d²` the
/// second-moment block.
pub fn a_matrix<T: Scalar>(variant: McvVariant, mean: &[T], cov: &Matrix<T>) -> Result<Vec<T>> {
    let lin = linearize(variant, mean, cov)?;
    let d = mean.len();
    let second = vec(&lin.grad_cov.scale(lin.f))?;
    let chain = Matrix::row_vector(&second).matmul(&dtilde(mean))?;
    let mut a: Vec<T> = lin.grad_mean.iter().zip(chain.row(0)).map(|(&g, &t)| lin.f * g + t).collect();
    debug_assert_eq!(a.len(), d);
    a.extend(second);
    Ok(a)
}

/// Scale factor `S_v` linking `A_v` to the gradient of `C^v`.
pub fn s_factor<T: Scalar>(variant: McvVariant, c: T, d: usize) -> Result<T> {
    if !(c > T::zero()) {
        return Err(McvError::InvalidArgument(format!("MCV value must be positive, got {c}")));
    }
    Ok(match variant {
        McvVariant::Rr => {
            let dd = T::from_count(d);
            c.powi(2 - 4 * d as i32) / (dd * dd)
        }
        McvVariant::Vv | McvVariant::Az => c.powi(-2),
        McvVariant::Vn => c.powi(6),
    })
}
