//! Equicoordinate quantiles of centred multivariate normal laws by plain
//! Monte Carlo.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{McvError, Result};
use crate::numkit::linalg::sym_sqrt;
use crate::numkit::matrix::Matrix;
use crate::numkit::rng::RngStream;
use crate::scalar::Scalar;

pub const MIN_MC_DRAWS: usize = 10_000;
const CHUNK: usize = 4096;

/// Sorted sample of a max-type reference statistic (Monte Carlo draws of
/// `max_ℓ |Z_ℓ|`, or per-resample bootstrap maxima). Infinite entries mark
/// degenerate resamples.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MaxReference {
    sorted: Vec<f64>,
}

impl MaxReference {
    pub fn from_values(mut values: Vec<f64>) -> Self {
        values.sort_by(|a, b| a.total_cmp(b));
        Self { sorted: values }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    /// The `⌈(N+1)(1−α)⌉`-th order statistic; `+∞` when that index exceeds `N`.
    pub fn quantile(&self, alpha: f64) -> f64 {
        let n = self.sorted.len();
        let k = ((n as f64 + 1.0) * (1.0 - alpha) - 1e-9).ceil().max(1.0) as usize;
        if k > n {
            f64::INFINITY
        } else {
            self.sorted[k - 1]
        }
    }

    /// `(1 + #{m ≥ stat}) / (N + 1)`.
    pub fn p_value(&self, stat: f64) -> f64 {
        let below = self.sorted.partition_point(|&m| m < stat);
        let count = self.sorted.len() - below;
        (1 + count) as f64 / (self.sorted.len() + 1) as f64
    }
}

fn check_correlation<T: Scalar>(r: &Matrix<T>) -> Result<Matrix<f64>> {
    if !r.is_square() {
        return Err(McvError::NotSquare { rows: r.rows(), cols: r.cols() });
    }
    let r = r.to_f64();
    if !r.is_symmetric(1e-10) || r.diagonal().iter().any(|&x| (x - 1.0).abs() > 1e-10) {
        return Err(McvError::InvalidArgument("correlation matrix must be symmetric with unit diagonal".into()));
    }
    Ok(r)
}

/// Monte Carlo sample of `max_ℓ |Z_ℓ|` for `Z ~ N(0, R)`, with `Z = R^{1/2}·g`.
pub fn max_abs_reference<T: Scalar>(r: &Matrix<T>, draws: usize, rng: RngStream) -> Result<MaxReference> {
    let r = check_correlation(r)?;
    let root = sym_sqrt(&r, 1e-10)?;
    let dim = r.rows();
    let chunks = draws.div_ceil(CHUNK);
    let values: Vec<f64> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut gen = rng.child(c as u64).generator();
            let len = CHUNK.min(draws - c * CHUNK);
            let root = &root;
            let mut g = vec![0.0; dim];
            (0..len)
                .map(move |_| {
                    for x in g.iter_mut() {
                        *x = StandardNormal.sample(&mut gen);
                    }
                    (0..dim).map(|i| crate::numkit::matrix::dot(root.row(i), &g).abs()).fold(0.0, f64::max)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(MaxReference::from_values(values))
}

/// Value `q` with `P(max_ℓ |Z_ℓ| ≤ q) ≈ 1 − α` for `Z ~ N(0, R)`.
pub fn mvn_equicoordinate_quantile<T: Scalar>(r: &Matrix<T>, alpha: f64, draws: usize, rng: RngStream) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(McvError::Probability(alpha));
    }
    if draws < MIN_MC_DRAWS {
        return Err(McvError::InvalidArgument(format!("need at least {MIN_MC_DRAWS} Monte Carlo draws, got {draws}")));
    }
    Ok(max_abs_reference(r, draws, rng)?.quantile(alpha))
}
