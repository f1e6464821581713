//! Decompositions for the small dense matrices used throughout the crate
//! (dimension up to a few dozen). Jacobi methods are used for both the
//! symmetric eigenproblem and the SVD: they are short, accurate, and fast
//! enough at these sizes.

use crate::error::{McvError, Result};
use crate::numkit::matrix::Matrix;
use crate::scalar::Scalar;

const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition `A = V·diag(λ)·Vᵀ` of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    /// Eigenvalues in descending order.
    pub values: Vec<T>,
    /// Eigenvectors as columns, in the same order as `values`.
    pub vectors: Matrix<T>,
}

/// Cyclic Jacobi eigen-solver for symmetric matrices.
pub fn symmetric_eigen<T: Scalar>(a: &Matrix<T>) -> Result<SymmetricEigen<T>> {
    if !a.is_square() {
        return Err(McvError::NotSquare { rows: a.rows(), cols: a.cols() });
    }
    let n = a.rows();
    let mut m = a.symmetrize();
    let mut v = Matrix::identity(n);
    let scale = m.max_abs();
    if scale > T::zero() {
        for _ in 0..MAX_SWEEPS {
            let off: T = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| m[(i, j)] * m[(i, j)])
                .sum();
            if off.sqrt() <= T::epsilon() * scale * T::lit(1e-2) {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = m[(p, q)];
                    if apq == T::zero() {
                        continue;
                    }
                    let theta = (m[(q, q)] - m[(p, p)]) / (T::lit(2.0) * apq);
                    let t = theta.signum() / (theta.abs() + (T::one() + theta * theta).sqrt());
                    let c = T::one() / (T::one() + t * t).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let mkp = m[(k, p)];
                        let mkq = m[(k, q)];
                        m[(k, p)] = c * mkp - s * mkq;
                        m[(k, q)] = s * mkp + c * mkq;
                    }
                    for k in 0..n {
                        let mpk = m[(p, k)];
                        let mqk = m[(q, k)];
                        m[(p, k)] = c * mpk - s * mqk;
                        m[(q, k)] = s * mpk + c * mqk;
                    }
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].partial_cmp(&m[(i, i)]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SymmetricEigen { values, vectors })
}

/// Thin singular value decomposition `A = U·diag(σ)·Vᵀ`.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    pub u: Matrix<T>,
    /// Singular values, descending.
    pub singular_values: Vec<T>,
    pub v: Matrix<T>,
}

/// One-sided (Hestenes) Jacobi SVD.
pub fn svd<T: Scalar>(a: &Matrix<T>) -> Svd<T> {
    if a.rows() < a.cols() {
        let t = svd(&a.transpose());
        return Svd { u: t.v, singular_values: t.singular_values, v: t.u };
    }
    let (m, n) = a.shape();
    // Work on columns: store Aᵀ so each column is a contiguous row.
    let mut w = a.transpose();
    let mut v = Matrix::<T>::identity(n);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                for k in 0..m {
                    let x = w[(p, k)];
                    let y = w[(q, k)];
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma == T::zero() || gamma.abs() <= T::epsilon() * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for k in 0..m {
                    let x = w[(p, k)];
                    let y = w[(q, k)];
                    w[(p, k)] = c * x - s * y;
                    w[(q, k)] = s * x + c * y;
                }
                for k in 0..n {
                    let x = v[(k, p)];
                    let y = v[(k, q)];
                    v[(k, p)] = c * x - s * y;
                    v[(k, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<T> = (0..n).map(|j| w.row(j).iter().map(|&x| x * x).sum::<T>().sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap_or(std::cmp::Ordering::Equal));
    let singular_values: Vec<T> = order.iter().map(|&j| norms[j]).collect();
    let u = Matrix::from_fn(m, n, |r, c| {
        let j = order[c];
        if norms[j] > T::zero() {
            w[(j, r)] / norms[j]
        } else {
            T::zero()
        }
    });
    let v = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Svd { u, singular_values, v }
}

/// Absolute cut-off `tol·σ_max·max(rows, cols)` below which singular values
/// count as zero.
fn rank_cutoff<T: Scalar>(a: &Matrix<T>, sigma_max: T, tol: T) -> T {
    tol * sigma_max * T::from_count(a.rows().max(a.cols()))
}

/// Number of singular values above `tol·σ_max·max(rows, cols)`. Pass
/// `T::epsilon()` for the standard numerical-rank rule.
pub fn numeric_rank<T: Scalar>(a: &Matrix<T>, tol: T) -> usize {
    let s = svd(a);
    let smax = s.singular_values.first().copied().unwrap_or(T::zero());
    let cut = rank_cutoff(a, smax, tol);
    s.singular_values.iter().filter(|&&x| x > cut && x > T::zero()).count()
}

/// Moore–Penrose inverse, dropping singular values below
/// `tol·σ_max·max(rows, cols)`.
pub fn pinv<T: Scalar>(a: &Matrix<T>, tol: T) -> Matrix<T> {
    pinv_with_rank(a, tol).0
}

/// Pseudoinverse together with the numeric rank it was built from.
pub fn pinv_with_rank<T: Scalar>(a: &Matrix<T>, tol: T) -> (Matrix<T>, usize) {
    let s = svd(a);
    let smax = s.singular_values.first().copied().unwrap_or(T::zero());
    let cut = rank_cutoff(a, smax, tol);
    let (m, n) = a.shape();
    let mut out = Matrix::zeros(n, m);
    let mut rank = 0;
    for (k, &sv) in s.singular_values.iter().enumerate() {
        if sv <= cut || sv == T::zero() {
            continue;
        }
        rank += 1;
        let inv = T::one() / sv;
        for i in 0..n {
            let vik = s.v[(i, k)] * inv;
            if vik == T::zero() {
                continue;
            }
            for j in 0..m {
                out[(i, j)] += vik * s.u[(j, k)];
            }
        }
    }
    (out, rank)
}

/// Symmetric square root of a PSD matrix. Eigenvalues in `[-tol·max(1, λ_max), 0)`
/// are clamped to zero; anything more negative is reported as non-PSD.
pub fn sym_sqrt<T: Scalar>(a: &Matrix<T>, tol: T) -> Result<Matrix<T>> {
    let eig = symmetric_eigen(a)?;
    let lmax = eig.values.first().copied().unwrap_or(T::zero()).abs().max(T::one());
    let roots = eig
        .values
        .iter()
        .map(|&l| {
            if l >= T::zero() {
                Ok(l.sqrt())
            } else if l >= -tol * lmax {
                Ok(T::zero())
            } else {
                Err(McvError::NotPsd(l.as_f64()))
            }
        })
        .collect::<Result<Vec<T>>>()?;
    let n = a.rows();
    let v = &eig.vectors;
    Ok(Matrix::from_fn(n, n, |i, j| (0..n).map(|k| v[(i, k)] * roots[k] * v[(j, k)]).sum()))
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    l: Matrix<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Factorizes `a`, treating it as singular when a pivot falls below
    /// `ε·d·max_i a_ii`, the numeric-rank criterion on the diagonal scale.
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(McvError::NotSquare { rows: a.rows(), cols: a.cols() });
        }
        let n = a.rows();
        let scale = a.diagonal().into_iter().fold(T::zero(), |m, x| m.max(x.abs()));
        let cut = T::epsilon() * T::from_count(n) * scale;
        if scale <= T::zero() {
            return Err(McvError::SingularCovariance);
        }
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut diag = a[(j, j)];
            for k in 0..j {
                diag -= l[(j, k)] * l[(j, k)];
            }
            if !(diag > cut) {
                return Err(McvError::SingularCovariance);
            }
            let ljj = diag.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Self { l })
    }

    pub fn factor(&self) -> &Matrix<T> {
        &self.l
    }

    pub fn log_det(&self) -> T {
        T::lit(2.0) * (0..self.l.rows()).map(|i| self.l[(i, i)].ln()).sum::<T>()
    }

    /// Solves `A·x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.l.rows();
        let mut y = b.to_vec();
        for i in 0..n {
            let s = (0..i).fold(y[i], |s, k| s - self.l[(i, k)] * y[k]);
            y[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let s = ((i + 1)..n).fold(y[i], |s, k| s - self.l[(k, i)] * y[k]);
            y[i] = s / self.l[(i, i)];
        }
        y
    }

    pub fn inverse(&self) -> Matrix<T> {
        let n = self.l.rows();
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = T::zero());
            e[j] = T::one();
            let col = self.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv.symmetrize()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_f64_rows(rows).unwrap()
    }

    fn assert_close(a: &Matrix<f64>, b: &Matrix<f64>, tol: f64) {
        assert_eq!(a.shape(), b.shape());
        let diff = a.sub(b).unwrap().max_abs();
        assert!(diff <= tol, "max diff {diff:e} > {tol:e}\n{a:?}\n{b:?}");
    }

    fn penrose_residuals(a: &Matrix<f64>, p: &Matrix<f64>) -> [f64; 4] {
        let apa = &(a * p) * a;
        let pap = &(p * a) * p;
        let ap = a * p;
        let pa = p * a;
        [
            apa.sub(a).unwrap().frobenius_norm(),
            pap.sub(p).unwrap().frobenius_norm(),
            ap.sub(&ap.transpose()).unwrap().frobenius_norm(),
            pa.sub(&pa.transpose()).unwrap().frobenius_norm(),
        ]
    }

    #[test]
    fn pinv_examples() {
        assert_close(&pinv(&Matrix::identity(3), f64::EPSILON), &Matrix::identity(3), 1e-14);
        assert_close(&pinv(&m(&[&[2.0, 0.0], &[0.0, 0.0]]), f64::EPSILON), &m(&[&[0.5, 0.0], &[0.0, 0.0]]), 1e-14);
        let ones = Matrix::filled(2, 2, 1.0);
        let p = pinv(&ones, f64::EPSILON);
        assert_close(&p, &Matrix::filled(2, 2, 0.25), 1e-14);
        for r in penrose_residuals(&ones, &p) {
            assert!(r <= 1e-12);
        }
    }

    #[test]
    fn rank_examples() {
        let p4 = Matrix::from_fn(4, 4, |i, j| if i == j { 0.75 } else { -0.25 });
        assert_eq!(numeric_rank(&p4, f64::EPSILON), 3);
        assert_eq!(numeric_rank(&Matrix::<f64>::zeros(2, 2), f64::EPSILON), 0);
        let tukey4 = m(&[
            &[-1.0, 1.0, 0.0, 0.0],
            &[-1.0, 0.0, 1.0, 0.0],
            &[-1.0, 0.0, 0.0, 1.0],
            &[0.0, -1.0, 1.0, 0.0],
            &[0.0, -1.0, 0.0, 1.0],
            &[0.0, 0.0, -1.0, 1.0],
        ]);
        assert_eq!(numeric_rank(&tukey4, f64::EPSILON), 3);
    }

    #[test]
    fn sym_sqrt_examples() {
        assert_close(&sym_sqrt(&Matrix::identity(3), 1e-10).unwrap(), &Matrix::identity(3), 1e-14);
        let d = Matrix::diag(&[4.0, 9.0]);
        assert_eq!(sym_sqrt(&d, 1e-10).unwrap(), Matrix::diag(&[2.0, 3.0]));
        assert!(matches!(sym_sqrt(&Matrix::diag(&[1.0, -0.5]), 1e-10), Err(McvError::NotPsd(_))));
        // tiny negative eigenvalue is clamped
        let r = sym_sqrt(&Matrix::diag(&[1.0, -1e-13]), 1e-10).unwrap();
        assert_eq!(r[(1, 1)], 0.0);
    }

    #[test]
    fn cholesky_detects_singularity() {
        let s = m(&[&[1.0, 1.0], &[1.0, 1.0]]);
        assert_eq!(Cholesky::new(&s).unwrap_err(), McvError::SingularCovariance);
        let a = m(&[&[4.0, 2.0], &[2.0, 3.0]]);
        let c = Cholesky::new(&a).unwrap();
        assert!((c.log_det() - 8f64.ln()).abs() < 1e-14);
        assert_close(&(&a * &c.inverse()), &Matrix::identity(2), 1e-14);
    }

    #[test]
    fn works_in_single_precision() {
        let a = Matrix::<f32>::from_f64_rows(&[&[4.0, 1.0], &[1.0, 3.0]]).unwrap();
        let r = sym_sqrt(&a, f32::psd_tol()).unwrap();
        let back = &r * &r;
        assert!(back.sub(&a).unwrap().max_abs() < 1e-5);
        assert_eq!(numeric_rank(&a, f32::EPSILON), 2);
    }

    fn matrix_strategy(max_dim: usize) -> impl Strategy<Value = Matrix<f64>> {
        (1..=max_dim, 1..=max_dim).prop_flat_map(|(r, c)| {
            prop::collection::vec(-5.0f64..5.0, r * c).prop_map(move |v| Matrix::from_vec(r, c, v).unwrap())
        })
    }

    fn spd_strategy(max_dim: usize) -> impl Strategy<Value = Matrix<f64>> {
        matrix_strategy(max_dim).prop_map(|b| {
            let n = b.rows();
            let g = &b * &b.transpose();
            g.add(&Matrix::identity(n).scale(0.1)).unwrap()
        })
    }

    proptest! {
        #[test]
        fn pinv_penrose_conditions(a in matrix_strategy(6), rank_cut in 0usize..3) {
            // Optionally make the matrix rank deficient by duplicating rows.
            let mut a = a;
            if a.rows() > 1 && rank_cut > 0 {
                let first = a.row(0).to_vec();
                a.row_mut(a.rows() - 1).copy_from_slice(&first);
            }
            let p = pinv(&a, f64::EPSILON);
            let scale = a.frobenius_norm().max(1.0);
            let pscale = p.frobenius_norm().max(1.0);
            let [r1, r2, r3, r4] = penrose_residuals(&a, &p);
            prop_assert!(r1 <= 1e-8 * scale);
            prop_assert!(r2 <= 1e-8 * pscale);
            prop_assert!(r3 <= 1e-8 * scale * pscale);
            prop_assert!(r4 <= 1e-8 * scale * pscale);
        }

        #[test]
        fn sym_sqrt_reconstructs_spd(a in spd_strategy(6)) {
            let r = sym_sqrt(&a, 1e-10).unwrap();
            prop_assert!(r.is_symmetric(1e-12 * a.max_abs()));
            let back = &r * &r;
            prop_assert!(back.sub(&a).unwrap().frobenius_norm() <= 1e-10 * a.frobenius_norm());
        }

        #[test]
        fn eigen_reconstructs(a in spd_strategy(5)) {
            let e = symmetric_eigen(&a).unwrap();
            let n = a.rows();
            let back = Matrix::from_fn(n, n, |i, j| (0..n).map(|k| e.vectors[(i, k)] * e.values[k] * e.vectors[(j, k)]).sum());
            prop_assert!(back.sub(&a).unwrap().max_abs() <= 1e-11 * a.max_abs());
            prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        }

        #[test]
        fn sym_sqrt_exact_on_diagonals(v in prop::collection::vec(0.0f64..100.0, 1..6)) {
            let r = sym_sqrt(&Matrix::diag(&v), 1e-10).unwrap();
            for (i, x) in v.iter().enumerate() {
                prop_assert_eq!(r[(i, i)], x.sqrt());
            }
        }

        #[test]
        fn cholesky_solve_matches_product(a in spd_strategy(5), seed in prop::collection::vec(-3.0f64..3.0, 5)) {
            let n = a.rows();
            let b = &seed[..n];
            let c = Cholesky::new(&a).unwrap();
            let x = c.solve(b);
            let back = a.mul_vec(&x).unwrap();
            for i in 0..n {
                prop_assert!((back[i] - b[i]).abs() <= 1e-9 * (1.0 + b[i].abs()) * a.max_abs());
            }
        }
    }
}
