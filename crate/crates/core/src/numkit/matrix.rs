use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use serde::{Deserialize, Serialize};

use crate::error::{McvError, Result};
use crate::scalar::Scalar;

/// Dense row-major matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    /// Builds a matrix from row-major entries, rejecting empty shapes and
    /// non-finite values.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(McvError::EmptyMatrix);
        }
        if data.len() != rows * cols {
            return Err(McvError::DimensionMismatch {
                expected: format!("{} entries", rows * cols),
                found: format!("{}", data.len()),
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(McvError::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != cols) {
            return Err(McvError::DimensionMismatch {
                expected: format!("{cols} columns in every row"),
                found: "ragged rows".into(),
            });
        }
        let data = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        Self::from_vec(rows.len(), cols, data)
    }

    /// Convenience for literals in tests and builders.
    pub fn from_f64_rows(rows: &[&[f64]]) -> Result<Self> {
        let converted: Vec<Vec<T>> = rows.iter().map(|r| r.iter().map(|&x| T::lit(x)).collect()).collect();
        Self::from_rows(&converted)
    }

    pub(crate) fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Self { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn diag(values: &[T]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| if i == j { values[i] } else { T::zero() })
    }

    pub fn row_vector(values: &[T]) -> Self {
        Self { rows: 1, cols: values.len(), data: values.to_vec() }
    }

    pub fn column_vector(values: &[T]) -> Self {
        Self { rows: values.len(), cols: 1, data: values.to_vec() }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn scale(&self, a: T) -> Self {
        self.map(|x| a * x)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(shape_mismatch(self.shape(), other.shape()));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(McvError::DimensionMismatch {
                expected: format!("{} rows on the right", self.cols),
                found: format!("{}", other.rows),
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                let src = other.row(k);
                for (o, &b) in out.row_mut(i).iter_mut().zip(src) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.cols {
            return Err(McvError::DimensionMismatch {
                expected: format!("vector of length {}", self.cols),
                found: format!("{}", v.len()),
            });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    /// `vᵀ·A·w` for square `A`.
    pub fn bilinear(&self, v: &[T], w: &[T]) -> T {
        debug_assert_eq!(v.len(), self.rows);
        debug_assert_eq!(w.len(), self.cols);
        (0..self.rows).map(|i| v[i] * dot(self.row(i), w)).sum()
    }

    pub fn trace(&self) -> T {
        self.diagonal().into_iter().sum()
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        self.is_square() && (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }

    /// Average of the matrix and its transpose.
    pub fn symmetrize(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| (self[(i, j)] + self[(j, i)]) * T::lit(0.5))
    }

    pub fn row_sums(&self) -> Vec<T> {
        (0..self.rows).map(|i| self.row(i).iter().copied().sum()).collect()
    }

    pub fn to_f64(&self) -> Matrix<f64> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x.as_f64()).collect() }
    }

    pub fn cast<U: Scalar>(&self) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| U::lit(x.as_f64())).collect() }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Scalar> Mul for &Matrix<T> {
    type Output = Matrix<T>;

    /// Panics on incompatible shapes; use [`Matrix::matmul`] for a checked product.
    fn mul(self, rhs: &Matrix<T>) -> Matrix<T> {
        self.matmul(rhs).expect("compatible matrix shapes")
    }
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> =
                self.data[i * self.cols..(i + 1) * self.cols].iter().map(|x| format!("{x:?}")).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn shape_mismatch(a: (usize, usize), b: (usize, usize)) -> McvError {
    McvError::DimensionMismatch { expected: format!("{}x{}", a.0, a.1), found: format!("{}x{}", b.0, b.1) }
}

/// Kronecker product: block `(i, j)` of the result is `a[i,j]·b`.
pub fn kron<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    let (p, q) = b.shape();
    Matrix::from_fn(a.rows * p, a.cols * q, |i, j| a[(i / p, j / q)] * b[(i % p, j % q)])
}

/// Vectorization of a square matrix; position `a·d + r` (zero-based) holds `A[a, r]`.
///
/// Every matrix vectorized by the estimators is symmetric, so the row-stacking
/// order used here coincides with column stacking.
pub fn vec<T: Scalar>(a: &Matrix<T>) -> Result<Vec<T>> {
    if !a.is_square() {
        return Err(McvError::NotSquare { rows: a.rows, cols: a.cols });
    }
    Ok(a.data.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_f64_rows(rows).unwrap()
    }

    #[test]
    fn kron_with_scalar_one_is_identity_map() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(kron(&m(&[&[1.0]]), &a), a);
    }

    #[test]
    fn kron_identity_gives_block_diagonal() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let k = kron(&Matrix::identity(2), &a);
        let expected = m(&[&[1.0, 2.0, 0.0, 0.0], &[3.0, 4.0, 0.0, 0.0], &[0.0, 0.0, 1.0, 2.0], &[0.0, 0.0, 3.0, 4.0]]);
        assert_eq!(k, expected);
    }

    #[test]
    fn kron_centering_with_averaging_row() {
        let p2 = m(&[&[0.5, -0.5], &[-0.5, 0.5]]);
        let avg = m(&[&[0.5, 0.5]]);
        let k = kron(&p2, &avg);
        assert_eq!(k, m(&[&[0.25, 0.25, -0.25, -0.25], &[-0.25, -0.25, 0.25, 0.25]]));
    }

    #[test]
    fn kron_is_bilinear_in_scalar() {
        let a = m(&[&[1.0, -2.0], &[0.5, 3.0]]);
        let b = m(&[&[2.0, 1.0, 0.0]]);
        assert_eq!(kron(&a.scale(3.0), &b), kron(&a, &b).scale(3.0));
        assert_eq!(kron(&a, &b.scale(0.5)), kron(&a, &b).scale(0.5));
    }

    #[test]
    fn vec_examples() {
        assert_eq!(vec(&Matrix::<f64>::identity(2)).unwrap(), vec![1.0, 0.0, 0.0, 1.0]);
        assert_eq!(vec(&m(&[&[1.0, 2.0], &[2.0, 5.0]])).unwrap(), vec![1.0, 2.0, 2.0, 5.0]);
        assert_eq!(vec(&m(&[&[7.5]])).unwrap(), vec![7.5]);
        assert!(matches!(vec(&m(&[&[1.0, 2.0]])), Err(McvError::NotSquare { .. })));
    }

    #[test]
    fn rejects_non_finite_and_empty() {
        assert_eq!(Matrix::<f64>::from_vec(1, 1, vec![f64::NAN]), Err(McvError::NonFinite));
        assert_eq!(Matrix::<f64>::from_vec(0, 1, vec![]), Err(McvError::EmptyMatrix));
    }

    #[test]
    fn matmul_and_bilinear_agree() {
        let a = m(&[&[2.0, 1.0], &[1.0, 3.0]]);
        let v = [1.0, -1.0];
        let av = a.mul_vec(&v).unwrap();
        assert_eq!(dot(&v, &av), a.bilinear(&v, &v));
        assert_eq!(&a * &Matrix::identity(2), a);
    }
}
