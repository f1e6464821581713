use crate::error::{McvError, Result};
use crate::numkit::Matrix;
use crate::scalar::Scalar;

/// Read-only access to a set of `d`-dimensional observations.
pub trait Rows<T> {
    fn n_rows(&self) -> usize;
    fn dim(&self) -> usize;
    fn row(&self, j: usize) -> &[T];
}

impl<T: Scalar> Rows<T> for Matrix<T> {
    fn n_rows(&self) -> usize {
        self.rows()
    }

    fn dim(&self) -> usize {
        self.cols()
    }

    fn row(&self, j: usize) -> &[T] {
        Matrix::row(self, j)
    }
}

/// A subset of the rows of a matrix, selected (possibly with repeats) by index.
#[derive(Debug, Clone, Copy)]
pub struct IndexedRows<'a, T> {
    data: &'a Matrix<T>,
    idx: &'a [usize],
}

impl<'a, T> IndexedRows<'a, T> {
    pub fn new(data: &'a Matrix<T>, idx: &'a [usize]) -> Self {
        Self { data, idx }
    }
}

impl<T: Scalar> Rows<T> for IndexedRows<'_, T> {
    fn n_rows(&self) -> usize {
        self.idx.len()
    }

    fn dim(&self) -> usize {
        self.data.cols()
    }

    fn row(&self, j: usize) -> &[T] {
        self.data.row(self.idx[j])
    }
}

/// One group of i.i.d. observations, rows = observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    values: Matrix<T>,
}

impl<T: Scalar> Sample<T> {
    pub fn new(values: Matrix<T>) -> Self {
        Self { values }
    }

    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        Ok(Self::new(Matrix::from_rows(rows)?))
    }

    /// Univariate sample.
    pub fn from_values(values: &[T]) -> Result<Self> {
        Ok(Self::new(Matrix::from_vec(values.len(), 1, values.to_vec())?))
    }

    pub fn n(&self) -> usize {
        self.values.rows()
    }

    pub fn d(&self) -> usize {
        self.values.cols()
    }

    pub fn values(&self) -> &Matrix<T> {
        &self.values
    }
}

impl<T: Scalar> Rows<T> for Sample<T> {
    fn n_rows(&self) -> usize {
        self.values.rows()
    }

    fn dim(&self) -> usize {
        self.values.cols()
    }

    fn row(&self, j: usize) -> &[T] {
        self.values.row(j)
    }
}

/// Plug-in moments of one sample, all with divisor `n`.
///
/// `psi3` is `d²×d` with row `a·d + r` (zero-based) holding
/// `Cov(X_a X_r, X_s)`; `psi4` is `d²×d²` with entries
/// `Cov(X_a X_r, X_b X_s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSet<T> {
    pub n: usize,
    pub mean: Vec<T>,
    pub cov: Matrix<T>,
    pub raw2: Matrix<T>,
    pub psi3: Matrix<T>,
    pub psi4: Matrix<T>,
}

impl<T: Scalar> MomentSet<T> {
    pub fn d(&self) -> usize {
        self.mean.len()
    }

    /// The `(d+d²)×(d+d²)` covariance of `(X, vec(XXᵀ))`:
    /// `[[Σ, Ψ3ᵀ], [Ψ3, Ψ4]]`.
    pub fn joint_covariance(&self) -> Matrix<T> {
        let d = self.d();
        let dd = d * d;
        Matrix::from_fn(d + dd, d + dd, |i, j| match (i < d, j < d) {
            (true, true) => self.cov[(i, j)],
            (true, false) => self.psi3[(j - d, i)],
            (false, true) => self.psi3[(i - d, j)],
            (false, false) => self.psi4[(i - d, j - d)],
        })
    }
}

pub(crate) fn mean_of<T: Scalar, R: Rows<T>>(x: &R) -> Vec<T> {
    let d = x.dim();
    let n = x.n_rows();
    let mut mean = vec![T::zero(); d];
    for j in 0..n {
        for (m, &v) in mean.iter_mut().zip(x.row(j)) {
            *m += v;
        }
    }
    let inv = T::one() / T::from_count(n);
    mean.iter_mut().for_each(|m| *m *= inv);
    mean
}

/// Covariance with divisor `n`, accumulated on centred rows.
pub(crate) fn covariance_of<T: Scalar, R: Rows<T>>(x: &R, mean: &[T]) -> Matrix<T> {
    let d = x.dim();
    let n = x.n_rows();
    let mut cov = Matrix::zeros(d, d);
    let mut u = vec![T::zero(); d];
    for j in 0..n {
        for ((ui, &xi), &mi) in u.iter_mut().zip(x.row(j)).zip(mean) {
            *ui = xi - mi;
        }
        for a in 0..d {
            let ua = u[a];
            for r in a..d {
                cov[(a, r)] += ua * u[r];
            }
        }
    }
    let inv = T::one() / T::from_count(n);
    for a in 0..d {
        for r in a..d {
            let v = cov[(a, r)] * inv;
            cov[(a, r)] = v;
            cov[(r, a)] = v;
        }
    }
    cov
}

/// Plug-in moments including the third- and fourth-order blocks.
pub fn sample_moments<T: Scalar, R: Rows<T>>(x: &R) -> Result<MomentSet<T>> {
    let n = x.n_rows();
    if n < 2 {
        return Err(McvError::TooFewObservations { n, min: 2 });
    }
    let d = x.dim();
    let dd = d * d;
    let inv = T::one() / T::from_count(n);
    let mean = mean_of(x);
    let cov = covariance_of(x, &mean);

    let mut raw2 = Matrix::zeros(d, d);
    for j in 0..n {
        let row = x.row(j);
        for a in 0..d {
            for r in 0..d {
                raw2[(a, r)] += row[a] * row[r];
            }
        }
    }
    let raw2 = raw2.scale(inv);

    // Centre the products at their means; the covariances then come out of a
    // single accumulation without the E[XY]−E[X]E[Y] cancellation.
    let mut psi3 = Matrix::zeros(dd, d);
    let mut psi4 = Matrix::zeros(dd, dd);
    let mut z = vec![T::zero(); dd];
    let mut u = vec![T::zero(); d];
    for j in 0..n {
        let row = x.row(j);
        for s in 0..d {
            u[s] = row[s] - mean[s];
        }
        for a in 0..d {
            for r in 0..d {
                z[a * d + r] = row[a] * row[r] - raw2[(a, r)];
            }
        }
        for p in 0..dd {
            let zp = z[p];
            for s in 0..d {
                psi3[(p, s)] += zp * u[s];
            }
            for q in p..dd {
                psi4[(p, q)] += zp * z[q];
            }
        }
    }
    let psi3 = psi3.scale(inv);
    for p in 0..dd {
        for q in p..dd {
            let v = psi4[(p, q)] * inv;
            psi4[(p, q)] = v;
            psi4[(q, p)] = v;
        }
    }
    Ok(MomentSet { n, mean, cov, raw2, psi3, psi4 })
}

/// Derivative of `vec(M2 − μμᵀ)` with respect to `μ`: the `d²×d` matrix with
/// entry `(a·d + r, s) = −x_r·1{s=a≠r} − 2x_s·1{s=r=a} − x_a·1{r=s≠a}`.
pub fn dtilde<T: Scalar>(x: &[T]) -> Matrix<T> {
    let d = x.len();
    let two = T::lit(2.0);
    Matrix::from_fn(d * d, d, |row, s| {
        let (a, r) = (row / d, row % d);
        if s == a && a == r {
            -two * x[s]
        } else if s == a {
            -x[r]
        } else if r == s {
            -x[a]
        } else {
            T::zero()
        }
    })
}
