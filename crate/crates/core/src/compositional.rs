//! Isometric log-ratio coordinates of compositions in the balance basis
//! `z_j = √(j/(j+1))·ln(gm(x_1..x_j)/x_{j+1})`, `j = 1..D−1`.

use crate::error::{McvError, Result};
use crate::numkit::Matrix;
use crate::scalar::Scalar;

/// ilr coordinates of one composition with `D ≥ 2` strictly positive parts.
/// The result does not depend on the closure (scaling) of the input.
pub fn ilr<T: Scalar>(x: &[T]) -> Result<Vec<T>> {
    if x.len() < 2 {
        return Err(McvError::InvalidArgument(format!("composition needs at least 2 parts, got {}", x.len())));
    }
    if let Some(&bad) = x.iter().find(|&&v| !(v > T::zero()) || !v.is_finite()) {
        return Err(McvError::NonPositivePart(bad.as_f64()));
    }
    let total: T = x.iter().copied().sum();
    let logs: Vec<T> = x.iter().map(|&v| (v / total).ln()).collect();
    let mut prefix = T::zero();
    let mut out = Vec::with_capacity(x.len() - 1);
    for j in 1..x.len() {
        prefix += logs[j - 1];
        let jt = T::from_count(j);
        let scale = (jt / (jt + T::one())).sqrt();
        out.push(scale * (prefix / jt - logs[j]));
    }
    Ok(out)
}

/// Row-wise [`ilr`]; `n×D` in, `n×(D−1)` out.
pub fn ilr_rows<T: Scalar>(x: &Matrix<T>) -> Result<Matrix<T>> {
    let mut data = Vec::with_capacity(x.rows() * x.cols().saturating_sub(1));
    for i in 0..x.rows() {
        data.extend(ilr(x.row(i))?);
    }
    Matrix::from_vec(x.rows(), x.cols() - 1, data)
}
