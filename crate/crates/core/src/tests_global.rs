//! Wald-type global tests of `H·C = 0` or `H·B = 0` across k groups, calibrated
//! by the chi-square limit, by permutation, or by the pooled bootstrap.
//!
//! Resample `b` always draws from `rng.child(b)`, and resamples are evaluated
//! in parallel and collected in index order, so results are identical for
//! any number of worker threads.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::ContrastMatrix;
use crate::error::{McvError, Result};
use crate::estimation::{estimate_rows, EstimateResult, IndexedRows, McvVariant, Sample};
use crate::numkit::{chisq_sf, numeric_rank, pinv_with_rank, Matrix, RngStream};
use crate::scalar::Scalar;

/// Relative slack when counting resampled statistics at least as large as the
/// observed one; absorbs summation-order rounding.
pub const TIE_TOL: f64 = 1e-10;

/// Relative singular-value cutoff for `rank(HΣ̂Hᵀ)`, `ε^{2/3}`.
pub fn rank_tol<T: Scalar>() -> T {
    T::epsilon().powf(T::lit(2.0 / 3.0))
}

/// k independent samples of a common dimension, stored as one pooled matrix
/// whose rows are grouped contiguously in group order.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedData<T> {
    pooled: Matrix<T>,
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    labels: Vec<String>,
}

impl<T: Scalar> GroupedData<T> {
    pub fn from_samples(samples: &[Sample<T>], labels: Option<Vec<String>>) -> Result<Self> {
        let k = samples.len();
        if k < 2 {
            return Err(McvError::InvalidArgument(format!("need at least 2 groups, got {k}")));
        }
        let d = samples[0].d();
        let mut data = Vec::new();
        let mut sizes = Vec::with_capacity(k);
        for s in samples {
            if s.d() != d {
                return Err(McvError::DimensionMismatch {
                    expected: format!("dimension {d}"),
                    found: format!("dimension {}", s.d()),
                });
            }
            data.extend_from_slice(s.values().as_slice());
            sizes.push(s.n());
        }
        let n = sizes.iter().sum();
        let labels = labels.unwrap_or_else(|| (1..=k).map(|i| i.to_string()).collect());
        Self::from_parts(Matrix::from_vec(n, d, data)?, sizes, labels)
    }

    /// Groups rows by label in order of first appearance.
    pub fn from_labelled_rows<S: AsRef<str>>(rows: &Matrix<T>, labels: &[S]) -> Result<Self> {
        if labels.len() != rows.rows() {
            return Err(McvError::DimensionMismatch {
                expected: format!("{} labels", rows.rows()),
                found: format!("{} labels", labels.len()),
            });
        }
        let mut names: Vec<String> = Vec::new();
        let mut members: Vec<Vec<usize>> = Vec::new();
        for (j, l) in labels.iter().enumerate() {
            let l = l.as_ref();
            match names.iter().position(|x| x == l) {
                Some(g) => members[g].push(j),
                None => {
                    names.push(l.to_string());
                    members.push(vec![j]);
                }
            }
        }
        let d = rows.cols();
        let mut data = Vec::with_capacity(rows.rows() * d);
        for m in &members {
            for &j in m {
                data.extend_from_slice(rows.row(j));
            }
        }
        let sizes = members.iter().map(Vec::len).collect();
        Self::from_parts(Matrix::from_vec(rows.rows(), d, data)?, sizes, names)
    }

    fn from_parts(pooled: Matrix<T>, sizes: Vec<usize>, labels: Vec<String>) -> Result<Self> {
        let k = sizes.len();
        if k < 2 {
            return Err(McvError::InvalidArgument(format!("need at least 2 groups, got {k}")));
        }
        if labels.len() != k {
            return Err(McvError::DimensionMismatch {
                expected: format!("{k} group labels"),
                found: format!("{}", labels.len()),
            });
        }
        if let Some(&n) = sizes.iter().find(|&&n| n < 2) {
            return Err(McvError::TooFewObservations { n, min: 2 });
        }
        let mut offsets = Vec::with_capacity(k + 1);
        offsets.push(0);
        for s in &sizes {
            offsets.push(offsets.last().copied().unwrap_or(0) + s);
        }
        Ok(Self { pooled, sizes, offsets, labels })
    }

    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    pub fn n(&self) -> usize {
        self.pooled.rows()
    }

    pub fn d(&self) -> usize {
        self.pooled.cols()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn pooled(&self) -> &Matrix<T> {
        &self.pooled
    }

    /// Rows of group `i`.
    pub fn group(&self, i: usize) -> Sample<T> {
        let (a, b) = (self.offsets[i], self.offsets[i + 1]);
        let d = self.d();
        let data = self.pooled.as_slice()[a * d..b * d].to_vec();
        Sample::new(Matrix::from_vec(b - a, d, data).expect("group rows are a valid sub-block"))
    }

    pub(crate) fn identity_index(&self) -> Vec<usize> {
        (0..self.n()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TargetKind {
    /// The MCV itself.
    C,
    /// The standardized mean `1/C`.
    B,
}

impl TargetKind {
    pub const ALL: [TargetKind; 2] = [TargetKind::C, TargetKind::B];
}

impl fmt::Display for TargetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TargetKind::C => "C",
            TargetKind::B => "B",
        })
    }
}

impl FromStr for TargetKind {
    type Err = McvError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "c" | "C" => Ok(TargetKind::C),
            "b" | "B" => Ok(TargetKind::B),
            _ => Err(McvError::InvalidArgument(format!("unknown target `{s}` (expected c or b)"))),
        }
    }
}

/// Parameter under test: one of the eight (kind, variant) combinations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Target {
    pub kind: TargetKind,
    pub variant: McvVariant,
}

impl Target {
    pub fn new(kind: TargetKind, variant: McvVariant) -> Self {
        Self { kind, variant }
    }

    pub fn all() -> impl Iterator<Item = Target> {
        TargetKind::ALL.into_iter().flat_map(|k| McvVariant::ALL.into_iter().map(move |v| Target::new(k, v)))
    }

    /// Point estimate and `√n`-scaled asymptotic variance for this target.
    pub fn pick<T: Scalar>(&self, e: &EstimateResult<T>) -> (T, T) {
        match self.kind {
            TargetKind::C => (e.c, e.var_c),
            TargetKind::B => (e.b, e.var_b),
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{}", self.kind, self.variant)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestMethod {
    Asymptotic,
    Permutation,
    Bootstrap,
}

impl fmt::Display for TestMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TestMethod::Asymptotic => "asymptotic",
            TestMethod::Permutation => "permutation",
            TestMethod::Bootstrap => "bootstrap",
        })
    }
}

impl FromStr for TestMethod {
    type Err = McvError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "asymptotic" | "asy" | "chisq" => Ok(TestMethod::Asymptotic),
            "permutation" | "perm" => Ok(TestMethod::Permutation),
            "bootstrap" | "boot" => Ok(TestMethod::Bootstrap),
            _ => Err(McvError::InvalidArgument(format!("unknown test method `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub target: Target,
    pub method: TestMethod,
    pub statistic: f64,
    pub rank: usize,
    pub p_value: f64,
    pub alpha: f64,
    pub reject: bool,
    pub resamples_used: usize,
    pub resamples_degenerate: usize,
    pub seed: Option<u64>,
}

/// Per-group estimates `θ̂_i` and the diagonal of `Σ̂ = diag((n/n_i)·σ̂²_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupEstimates<T> {
    pub theta: Vec<T>,
    pub sigma: Vec<T>,
    pub n: usize,
}

impl<T: Scalar> GroupEstimates<T> {
    pub fn sigma_matrix(&self) -> Matrix<T> {
        Matrix::diag(&self.sigma)
    }
}

/// Estimates per group where group `i` consists of `pooled` rows
/// `idx[offsets[i]..offsets[i+1]]`.
pub(crate) fn estimates_on<T: Scalar>(
    target: Target,
    pooled: &Matrix<T>,
    idx: &[usize],
    offsets: &[usize],
) -> Result<GroupEstimates<T>> {
    let n = idx.len();
    let nt = T::from_count(n);
    let k = offsets.len() - 1;
    let mut theta = Vec::with_capacity(k);
    let mut sigma = Vec::with_capacity(k);
    for i in 0..k {
        let rows = IndexedRows::new(pooled, &idx[offsets[i]..offsets[i + 1]]);
        let e = estimate_rows(target.variant, &rows)?;
        let (th, var) = target.pick(&e);
        theta.push(th);
        sigma.push(nt / T::from_count(offsets[i + 1] - offsets[i]) * var);
    }
    Ok(GroupEstimates { theta, sigma, n })
}

pub fn group_estimates<T: Scalar>(target: Target, data: &GroupedData<T>) -> Result<GroupEstimates<T>> {
    estimates_on(target, &data.pooled, &data.identity_index(), &data.offsets)
}

/// `H·diag(σ)·Hᵀ`.
pub(crate) fn contrast_covariance<T: Scalar>(h: &Matrix<T>, sigma: &[T]) -> Matrix<T> {
    let r = h.rows();
    let mut m = Matrix::zeros(r, r);
    for l in 0..r {
        for q in l..r {
            let v: T = h.row(l).iter().zip(h.row(q)).zip(sigma).map(|((&a, &b), &s)| a * b * s).sum();
            m[(l, q)] = v;
            m[(q, l)] = v;
        }
    }
    m
}

/// `n·(Hθ)ᵀ(HΣHᵀ)⁺(Hθ)` and `rank(HΣHᵀ)`.
pub(crate) fn wald_from<T: Scalar>(est: &GroupEstimates<T>, h: &Matrix<T>) -> Result<(T, usize)> {
    let m = contrast_covariance(h, &est.sigma);
    let (mp, rank) = pinv_with_rank(&m, rank_tol());
    let v = h.mul_vec(&est.theta)?;
    let s = T::from_count(est.n) * mp.bilinear(&v, &v);
    Ok((s.max(T::zero()), rank))
}

fn check_shape<T: Scalar>(data: &GroupedData<T>, h: &ContrastMatrix<T>) -> Result<()> {
    if h.n_groups() != data.k() {
        return Err(McvError::DimensionMismatch {
            expected: format!("{} contrast columns", data.k()),
            found: format!("{}", h.n_groups()),
        });
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(McvError::Probability(alpha))
    }
}

/// Observed statistic and the rank of `HΣ̂Hᵀ`.
pub fn wald_statistic<T: Scalar>(target: Target, data: &GroupedData<T>, h: &ContrastMatrix<T>) -> Result<(T, usize)> {
    check_shape(data, h)?;
    let est = group_estimates(target, data)?;
    let (s, rank) = wald_from(&est, h.h())?;
    if rank == 0 {
        return Err(McvError::ZeroContrastVariance(0));
    }
    let h_rank = numeric_rank(h.h(), rank_tol());
    if rank != h_rank {
        log::warn!("rank(HΣ̂Hᵀ) = {rank} differs from rank(H) = {h_rank}; using {rank} degrees of freedom");
    }
    Ok((s, rank))
}

pub fn asymptotic_test<T: Scalar>(
    target: Target,
    data: &GroupedData<T>,
    h: &ContrastMatrix<T>,
    alpha: f64,
) -> Result<TestResult> {
    check_alpha(alpha)?;
    let (s, rank) = wald_statistic(target, data, h)?;
    let statistic = s.as_f64();
    let p_value = chisq_sf(statistic, rank);
    Ok(TestResult {
        target,
        method: TestMethod::Asymptotic,
        statistic,
        rank,
        p_value,
        alpha,
        reject: p_value < alpha,
        resamples_used: 0,
        resamples_degenerate: 0,
        seed: None,
    })
}

/// `(1 + #{s ≥ observed}) / (B + 1)`, with [`TIE_TOL`] slack.
pub fn resampling_p_value(observed: f64, resampled: &[f64]) -> f64 {
    let cut = observed - TIE_TOL * observed.abs().max(f64::MIN_POSITIVE);
    let count = resampled.iter().filter(|&&s| s >= cut).count();
    (1 + count) as f64 / (resampled.len() + 1) as f64
}

/// Draws the index vector of one resample: a random partition of the pool
/// (permutation) or `n` draws with replacement (bootstrap).
pub(crate) fn resample_index(method: TestMethod, n: usize, rng: RngStream) -> Vec<usize> {
    let mut g = rng.generator();
    match method {
        TestMethod::Bootstrap => (0..n).map(|_| g.random_range(0..n)).collect(),
        _ => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut g);
            idx
        }
    }
}

/// Wald statistic of one resample, `+∞` when a resampled group violates the
/// moment assumptions or every contrast variance vanishes.
fn resampled_statistic<T: Scalar>(
    target: Target,
    data: &GroupedData<T>,
    h: &Matrix<T>,
    method: TestMethod,
    rng: RngStream,
) -> Result<f64> {
    let idx = resample_index(method, data.n(), rng);
    match estimates_on(target, &data.pooled, &idx, &data.offsets) {
        Ok(est) => {
            let (s, rank) = wald_from(&est, h)?;
            Ok(if rank == 0 { f64::INFINITY } else { s.as_f64() })
        }
        Err(e) if e.is_degeneracy() => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

fn resampling_test<T: Scalar>(
    method: TestMethod,
    target: Target,
    data: &GroupedData<T>,
    h: &ContrastMatrix<T>,
    alpha: f64,
    b: usize,
    rng: RngStream,
) -> Result<TestResult> {
    check_alpha(alpha)?;
    if b == 0 {
        return Err(McvError::InvalidArgument("number of resamples must be at least 1".into()));
    }
    let (s, rank) = wald_statistic(target, data, h)?;
    let statistic = s.as_f64();
    let stats: Vec<f64> = (0..b)
        .into_par_iter()
        .map(|i| resampled_statistic(target, data, h.h(), method, rng.child(i as u64)))
        .collect::<Result<_>>()?;
    let degenerate = stats.iter().filter(|s| s.is_infinite()).count();
    let p_value = resampling_p_value(statistic, &stats);
    Ok(TestResult {
        target,
        method,
        statistic,
        rank,
        p_value,
        alpha,
        reject: p_value < alpha,
        resamples_used: b,
        resamples_degenerate: degenerate,
        seed: Some(rng.seed),
    })
}

/// Permutation calibration: the pool is split at random into groups of the
/// original sizes.
pub fn permutation_test<T: Scalar>(
    target: Target,
    data: &GroupedData<T>,
    h: &ContrastMatrix<T>,
    alpha: f64,
    b: usize,
    rng: RngStream,
) -> Result<TestResult> {
    resampling_test(TestMethod::Permutation, target, data, h, alpha, b, rng)
}

/// Pooled bootstrap calibration: each group is drawn with replacement from
/// the whole pool.
pub fn bootstrap_test<T: Scalar>(
    target: Target,
    data: &GroupedData<T>,
    h: &ContrastMatrix<T>,
    alpha: f64,
    b: usize,
    rng: RngStream,
) -> Result<TestResult> {
    resampling_test(TestMethod::Bootstrap, target, data, h, alpha, b, rng)
}

/// Dispatches on `method`; `b` and `rng` are ignored for the asymptotic test.
pub fn global_test<T: Scalar>(
    method: TestMethod,
    target: Target,
    data: &GroupedData<T>,
    h: &ContrastMatrix<T>,
    alpha: f64,
    b: usize,
    rng: RngStream,
) -> Result<TestResult> {
    match method {
        TestMethod::Asymptotic => asymptotic_test(target, data, h, alpha),
        TestMethod::Permutation => permutation_test(target, data, h, alpha, b, rng),
        TestMethod::Bootstrap => bootstrap_test(target, data, h, alpha, b, rng),
    }
}
