//! Max-type multiple contrast tests with simultaneous confidence intervals.
//!
//! Critical values come either from the equicoordinate quantile of
//! `N(0, R̂)` (Monte Carlo) or from a pooled bootstrap in which each
//! resampled contrast is restudentized group-wise by `√(σ̂²_i/σ̂²ᵇ_i)`.
//! For every contrast `ℓ`, `decisions[ℓ]` holds iff `0 ∉ sci[ℓ]`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::ContrastMatrix;
use crate::error::{McvError, Result};
use crate::estimation::{estimate_rows, Interval};
use crate::numkit::{max_abs_reference, Matrix, MaxReference, RngStream, MIN_MC_DRAWS};
use crate::scalar::Scalar;
use crate::tests_global::{
    estimates_on, group_estimates, resample_index, GroupEstimates, GroupedData, Target, TargetKind, TestMethod,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MctMethod {
    Asymptotic,
    Bootstrap,
}

impl fmt::Display for MctMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MctMethod::Asymptotic => "asymptotic",
            MctMethod::Bootstrap => "bootstrap",
        })
    }
}

impl FromStr for MctMethod {
    type Err = McvError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "asymptotic" | "asy" | "mvn" => Ok(MctMethod::Asymptotic),
            "bootstrap" | "boot" => Ok(MctMethod::Bootstrap),
            "permutation" | "perm" => Err(McvError::InvalidArgument(
                "permutation calibration is not available for multiple contrast tests".into(),
            )),
            _ => Err(McvError::InvalidArgument(format!("unknown MCT method `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MctResult {
    pub target: Target,
    pub method: MctMethod,
    pub alpha: f64,
    pub n: usize,
    pub labels: Vec<String>,
    /// `h_ℓᵀθ̂`
    pub estimates: Vec<f64>,
    pub t: Vec<f64>,
    pub critical_value: f64,
    pub decisions: Vec<bool>,
    pub sci: Vec<Interval<f64>>,
    pub correlation: Matrix<f64>,
    pub global_p: f64,
    pub seed: Option<u64>,
    /// Monte Carlo draws or bootstrap resamples behind the critical value.
    pub resamples_used: usize,
    pub resamples_degenerate: usize,
    #[serde(skip)]
    pub reference: MaxReference,
}

/// One line of the per-contrast report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MctRow {
    pub contrast: String,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub statistic: f64,
    pub decision: bool,
}

impl MctResult {
    pub fn rows(&self) -> Vec<MctRow> {
        (0..self.t.len())
            .map(|l| MctRow {
                contrast: self.labels[l].clone(),
                estimate: self.estimates[l],
                lower: self.sci[l].lower,
                upper: self.sci[l].upper,
                statistic: self.t[l],
                decision: self.decisions[l],
            })
            .collect()
    }

    pub fn max_abs_t(&self) -> f64 {
        self.t.iter().fold(0.0, |m, t| m.max(t.abs()))
    }

    pub fn any_rejected(&self) -> bool {
        self.decisions.iter().any(|&d| d)
    }
}

/// `h_ℓᵀΣh_ℓ` for every contrast, erroring on a zero (or negative) value.
fn contrast_variances<T: Scalar>(h: &Matrix<T>, sigma: &Matrix<T>) -> Result<Vec<T>> {
    (0..h.rows())
        .map(|l| {
            let v = sigma.bilinear(h.row(l), h.row(l));
            if v > T::zero() {
                Ok(v)
            } else {
                Err(McvError::ZeroContrastVariance(l))
            }
        })
        .collect()
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

fn t_from<T: Scalar>(est: &GroupEstimates<T>, h: &Matrix<T>) -> Result<(Vec<T>, Vec<T>, Vec<T>)> {
    let vars = contrast_variances(h, &est.sigma_matrix())?;
    let root_n = T::from_count(est.n).sqrt();
    let lin = h.mul_vec(&est.theta)?;
    let t = lin.iter().zip(&vars).map(|(&e, &v)| root_n * e / v.sqrt()).collect();
    Ok((t, lin, vars))
}

/// `T_ℓ = √n·h_ℓᵀθ̂ / √(h_ℓᵀΣ̂h_ℓ)`.
pub fn t_statistics<T: Scalar>(target: Target, data: &GroupedData<T>, h: &ContrastMatrix<T>) -> Result<Vec<T>> {
    check_shape(data, h)?;
    let est = group_estimates(target, data)?;
    Ok(t_from(&est, h.h())?.0)
}

/// `R̂[ℓ,m] = h_ℓᵀΣh_m / √(h_ℓᵀΣh_ℓ · h_mᵀΣh_m)`.
pub fn correlation_matrix<T: Scalar>(sigma: &Matrix<T>, h: &Matrix<T>) -> Result<Matrix<T>> {
    if !sigma.is_square() || sigma.rows() != h.cols() {
        return Err(McvError::DimensionMismatch {
            expected: format!("{0}x{0} covariance", h.cols()),
            found: format!("{}x{}", sigma.rows(), sigma.cols()),
        });
    }
    let sd: Vec<T> = contrast_variances(h, sigma)?.into_iter().map(|v| v.sqrt()).collect();
    let r = h.rows();
    let mut out = Matrix::identity(r);
    for l in 0..r {
        for m in l + 1..r {
            let v = sigma.bilinear(h.row(l), h.row(m)) / (sd[l] * sd[m]);
            out[(l, m)] = v;
            out[(m, l)] = v;
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn assemble<T: Scalar>(
    target: Target,
    method: MctMethod,
    alpha: f64,
    h: &ContrastMatrix<T>,
    est: &GroupEstimates<T>,
    t: Vec<T>,
    lin: Vec<T>,
    vars: Vec<T>,
    correlation: Matrix<T>,
    reference: MaxReference,
    seed: Option<u64>,
    degenerate: usize,
) -> MctResult {
    let q = reference.quantile(alpha);
    let n = est.n as f64;
    let t: Vec<f64> = t.iter().map(|x| x.as_f64()).collect();
    let estimates: Vec<f64> = lin.iter().map(|x| x.as_f64()).collect();
    let sci = estimates
        .iter()
        .zip(&vars)
        .map(|(&e, v)| {
            let half = (v.as_f64() / n).sqrt() * q;
            if half.is_finite() {
                Interval::centered(e, half)
            } else {
                Interval { lower: f64::NEG_INFINITY, upper: f64::INFINITY }
            }
        })
        .collect();
    let decisions = t.iter().map(|x| x.abs() > q).collect();
    let max_t = t.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    MctResult {
        target,
        method,
        alpha,
        n: est.n,
        labels: h.labels().to_vec(),
        estimates,
        t,
        critical_value: q,
        decisions,
        sci,
        correlation: correlation.to_f64(),
        global_p: reference.p_value(max_t),
        seed,
        resamples_used: reference.len(),
        resamples_degenerate: degenerate,
        reference,
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(McvError::Probability(alpha))
    }
}

/// Calibration by the equicoordinate `(1−α)`-quantile of `N(0, R̂)`.
pub fn asymptotic_mct<T: Scalar>(
    target: Target,
    data: &GroupedData<T>,
    h: &ContrastMatrix<T>,
    alpha: f64,
    mc_draws: usize,
    rng: RngStream,
) -> Result<MctResult> {
    check_alpha(alpha)?;
    check_shape(data, h)?;
    if mc_draws < MIN_MC_DRAWS {
        return Err(McvError::InvalidArgument(format!(
            "need at least {MIN_MC_DRAWS} Monte Carlo draws, got {mc_draws}"
        )));
    }
    let est = group_estimates(target, data)?;
    let (t, lin, vars) = t_from(&est, h.h())?;
    let r = correlation_matrix(&est.sigma_matrix(), h.h())?;
    let reference = max_abs_reference(&r, mc_draws, rng)?;
    Ok(assemble(target, MctMethod::Asymptotic, alpha, h, &est, t, lin, vars, r, reference, Some(rng.seed), 0))
}

/// `max_ℓ √n·|h_ℓᵀ D (θ̂ᵇ − θ̂₀·1)| / √(h_ℓᵀΣ̂h_ℓ)` with `D = diag(√(σ̂_i/σ̂ᵇ_i))`;
/// `+∞` for a degenerate resample.
fn bootstrap_max<T: Scalar>(
    target: Target,
    data: &GroupedData<T>,
    h: &Matrix<T>,
    est: &GroupEstimates<T>,
    sd: &[T],
    theta0: T,
    rng: RngStream,
) -> Result<f64> {
    let idx = resample_index(TestMethod::Bootstrap, data.n(), rng);
    let eb = match estimates_on(target, data.pooled(), &idx, &offsets_of(data)) {
        Ok(e) => e,
        Err(e) if e.is_degeneracy() => return Ok(f64::INFINITY),
        Err(e) => return Err(e),
    };
    if eb.sigma.iter().any(|&s| s <= T::zero()) {
        return Ok(f64::INFINITY);
    }
    let z: Vec<T> = (0..data.k()).map(|i| (est.sigma[i] / eb.sigma[i]).sqrt() * (eb.theta[i] - theta0)).collect();
    let root_n = T::from_count(est.n).sqrt();
    let mut m = 0.0f64;
    for (l, &s) in sd.iter().enumerate() {
        let v = (root_n * crate::numkit::dot(h.row(l), &z) / s).as_f64().abs();
        m = m.max(v);
    }
    Ok(if m.is_nan() { f64::INFINITY } else { m })
}

fn offsets_of<T: Scalar>(data: &GroupedData<T>) -> Vec<usize> {
    let mut offsets = vec![0];
    for s in data.sizes() {
        offsets.push(offsets.last().copied().unwrap_or(0) + s);
    }
    offsets
}

/// Estimate of the common value under the global null from the pooled sample.
pub fn pooled_target<T: Scalar>(target: Target, data: &GroupedData<T>) -> Result<T> {
    let e = estimate_rows(target.variant, data.pooled())?;
    Ok(match target.kind {
        TargetKind::C => e.c,
        TargetKind::B => e.b,
    })
}

/// Calibration by the pooled bootstrap with group-wise restudentization.
pub fn bootstrap_mct<T: Scalar>(
    target: Target,
    data: &GroupedData<T>,
    h: &ContrastMatrix<T>,
    alpha: f64,
    b: usize,
    rng: RngStream,
) -> Result<MctResult> {
    check_alpha(alpha)?;
    check_shape(data, h)?;
    if b == 0 {
        return Err(McvError::InvalidArgument("number of resamples must be at least 1".into()));
    }
    let est = group_estimates(target, data)?;
    let (t, lin, vars) = t_from(&est, h.h())?;
    let sigma = est.sigma_matrix();
    let r = correlation_matrix(&sigma, h.h())?;
    let theta0 = pooled_target(target, data)?;
    let sd: Vec<T> = vars.iter().map(|v| v.sqrt()).collect();
    let maxima: Vec<f64> = (0..b)
        .into_par_iter()
        .map(|i| bootstrap_max(target, data, h.h(), &est, &sd, theta0, rng.child(i as u64)))
        .collect::<Result<_>>()?;
    let degenerate = maxima.iter().filter(|m| m.is_infinite()).count();
    let reference = MaxReference::from_values(maxima);
    Ok(assemble(target, MctMethod::Bootstrap, alpha, h, &est, t, lin, vars, r, reference, Some(rng.seed), degenerate))
}

/// Dispatches on `method`; `draws` is the Monte Carlo size or the number of
/// bootstrap resamples.
pub fn mct<T: Scalar>(
    method: MctMethod,
    target: Target,
    data: &GroupedData<T>,
    h: &ContrastMatrix<T>,
    alpha: f64,
    draws: usize,
    rng: RngStream,
) -> Result<MctResult> {
    match method {
        MctMethod::Asymptotic => asymptotic_mct(target, data, h, alpha, draws, rng),
        MctMethod::Bootstrap => bootstrap_mct(target, data, h, alpha, draws, rng),
    }
}

/// Global p-value of the max test, `(1 + #{m ≥ max|T|})/(N + 1)` over the
/// reference sample (Monte Carlo maxima or bootstrap maxima).
pub fn mct_global_p(result: &MctResult) -> f64 {
    result.reference.p_value(result.max_abs_t())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{dunnett_contrasts, ksample_contrasts, tukey_contrasts, validate_contrast};
    use crate::estimation::{McvVariant, Sample};
    use crate::numkit::{make_rng, normal_cdf, symmetric_eigen};
    use crate::tests_global::wald_statistic;
    use rand_distr::{Distribution, StandardNormal};

    fn normal_sample(seed: u64, n: usize, mean: &[f64], sd: f64) -> Sample<f64> {
        let mut g = make_rng(seed, 7).generator();
        let d = mean.len();
        let data = (0..n * d)
            .map(|i| {
                let z: f64 = StandardNormal.sample(&mut g);
                mean[i % d] + sd * z
            })
            .collect();
        Sample::new(Matrix::from_vec(n, d, data).unwrap())
    }

    fn groups(k: usize, n: usize, shift: f64) -> GroupedData<f64> {
        let s: Vec<_> = (0..k).map(|i| normal_sample(100 + i as u64, n, &[2.0 + shift * i as f64, 1.0], 1.0)).collect();
        GroupedData::from_samples(&s, None).unwrap()
    }

    fn vv(kind: TargetKind) -> Target {
        Target::new(kind, McvVariant::Vv)
    }

    fn check_duality(r: &MctResult) {
        for l in 0..r.t.len() {
            assert_eq!(r.decisions[l], !r.sci[l].contains(0.0), "contrast {l}");
            assert_eq!(r.decisions[l], r.t[l].abs() > r.critical_value);
            let mid = 0.5 * (r.sci[l].lower + r.sci[l].upper);
            if r.sci[l].width().is_finite() {
                assert!((mid - r.estimates[l]).abs() < 1e-12 * r.estimates[l].abs().max(1.0));
            }
        }
    }

    #[test]
    fn zero_contrast_gives_zero_statistic_and_scale_invariance() {
        let s = normal_sample(1, 20, &[1.0, 2.0], 1.0);
        let data = GroupedData::from_samples(&[s.clone(), s], None).unwrap();
        let t = t_statistics(vv(TargetKind::C), &data, &ksample_contrasts(2).unwrap()).unwrap();
        assert!(t.iter().all(|&x| x == 0.0));

        let data = groups(3, 20, 0.3);
        let h = dunnett_contrasts::<f64>(3).unwrap();
        let h3 = validate_contrast(h.h().scale(3.0)).unwrap();
        let a = t_statistics(vv(TargetKind::B), &data, &h).unwrap();
        let b = t_statistics(vv(TargetKind::B), &data, &h3).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn single_contrast_squares_to_wald() {
        let data = groups(2, 25, 0.4);
        let h = tukey_contrasts(2).unwrap();
        for t in crate::tests_global::Target::all() {
            let tt = t_statistics(t, &data, &h).unwrap();
            let (s, _) = wald_statistic(t, &data, &h).unwrap();
            assert!((tt[0] * tt[0] - s).abs() < 1e-10 * s.max(1e-12));
        }
    }

    #[test]
    fn correlation_examples() {
        let h = Matrix::<f64>::from_f64_rows(&[&[1.0, -1.0, 0.0, 0.0], &[0.0, 0.0, 1.0, -1.0]]).unwrap();
        assert_eq!(correlation_matrix(&Matrix::identity(4), &h).unwrap(), Matrix::identity(2));
        let tukey = tukey_contrasts::<f64>(3).unwrap();
        let r = correlation_matrix(&Matrix::identity(3), tukey.h()).unwrap();
        let expected = Matrix::from_f64_rows(&[&[1.0, 0.5, -0.5], &[0.5, 1.0, 0.5], &[-0.5, 0.5, 1.0]]).unwrap();
        assert!(r.sub(&expected).unwrap().max_abs() < 1e-15);
        let zero = Matrix::diag(&[1.0, 0.0, 0.0]);
        let h2 = Matrix::from_f64_rows(&[&[0.0, 1.0, -1.0]]).unwrap();
        assert_eq!(correlation_matrix(&zero, &h2), Err(McvError::ZeroContrastVariance(0)));
    }

    #[test]
    fn correlation_is_psd() {
        let data = groups(5, 15, 0.1);
        let est = group_estimates(vv(TargetKind::C), &data).unwrap();
        let r = correlation_matrix(&est.sigma_matrix(), tukey_contrasts(5).unwrap().h()).unwrap();
        let eig = symmetric_eigen(&r).unwrap();
        assert!(eig.values.iter().all(|&v| v > -1e-10));
        assert!(r.is_symmetric(0.0));
    }

    #[test]
    fn single_contrast_is_two_sided_z_test() {
        let data = groups(2, 30, 0.2);
        let r = asymptotic_mct(vv(TargetKind::C), &data, &tukey_contrasts(2).unwrap(), 0.05, 100_000, make_rng(5, 0))
            .unwrap();
        assert!((r.critical_value - 1.96).abs() < 0.03, "{}", r.critical_value);
        let exact = 2.0 * (1.0 - normal_cdf(r.t[0].abs()));
        assert!((mct_global_p(&r) - exact).abs() < 0.01);
        assert_eq!(r.global_p, mct_global_p(&r));
        check_duality(&r);
    }

    #[test]
    fn sci_direct_formula() {
        let reference = MaxReference::from_values(vec![2.0; 99]);
        let h = validate_contrast(Matrix::<f64>::from_f64_rows(&[&[-1.0, 1.0]]).unwrap()).unwrap();
        let est = GroupEstimates { theta: vec![0.0, 0.5], sigma: vec![0.5, 0.5], n: 100 };
        let r = assemble(
            vv(TargetKind::C),
            MctMethod::Asymptotic,
            0.05,
            &h,
            &est,
            vec![5.0],
            vec![0.5],
            vec![1.0],
            Matrix::identity(1),
            reference,
            None,
            0,
        );
        assert!((r.sci[0].lower - 0.3).abs() < 1e-12 && (r.sci[0].upper - 0.7).abs() < 1e-12);
        assert!(r.decisions[0]);
    }

    #[test]
    fn global_p_edge_cases() {
        let s = normal_sample(1, 20, &[1.0, 2.0], 1.0);
        let data = GroupedData::from_samples(&[s.clone(), s.clone(), s], None).unwrap();
        let r = asymptotic_mct(vv(TargetKind::B), &data, &tukey_contrasts(3).unwrap(), 0.05, 10_000, make_rng(1, 0))
            .unwrap();
        assert_eq!(mct_global_p(&r), 1.0);
        assert!(!r.any_rejected());
        check_duality(&r);
    }

    #[test]
    fn quantile_is_monotone_in_alpha() {
        let data = groups(4, 20, 0.05);
        let h = tukey_contrasts(4).unwrap();
        let boot = bootstrap_mct(vv(TargetKind::B), &data, &h, 0.05, 300, make_rng(3, 0)).unwrap();
        let asy = asymptotic_mct(vv(TargetKind::B), &data, &h, 0.05, 20_000, make_rng(3, 0)).unwrap();
        for r in [&boot, &asy] {
            let qs: Vec<f64> = [0.01, 0.05, 0.1, 0.2].iter().map(|&a| r.reference.quantile(a)).collect();
            assert!(qs.windows(2).all(|w| w[0] >= w[1]), "{qs:?}");
            check_duality(r);
        }
        assert_eq!(boot.resamples_used, 300);
    }

    #[test]
    fn bootstrap_deterministic_across_threads() {
        let data = groups(3, 15, 0.1);
        let h = dunnett_contrasts(3).unwrap();
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| bootstrap_mct(vv(TargetKind::C), &data, &h, 0.05, 150, make_rng(9, 1)).unwrap())
        };
        let a = run(1);
        let b = run(3);
        assert_eq!(a.reference, b.reference);
        assert_eq!(a, b);
    }

    #[test]
    fn identical_studentization_reduces_to_plain_contrasts() {
        // With σ̂ᵇ = σ̂ the restudentization factor is one.
        let est = GroupEstimates::<f64> { theta: vec![1.0, 2.0], sigma: vec![0.3, 0.7], n: 10 };
        let d: Vec<f64> = est.sigma.iter().zip(&est.sigma).map(|(a, b)| (a / b).sqrt()).collect();
        assert_eq!(d, vec![1.0, 1.0]);
        // Entrywise root equals the matrix path Σ̂^{1/2}(Σ̂ᵇ)^{-1/2} for diagonal matrices.
        let sb = [0.2f64, 1.1];
        let root = crate::numkit::sym_sqrt(&Matrix::diag(&est.sigma), 1e-12).unwrap();
        let inv_root = crate::numkit::sym_sqrt(&Matrix::diag(&[1.0 / sb[0], 1.0 / sb[1]]), 1e-12).unwrap();
        let prod = &root * &inv_root;
        for i in 0..2 {
            assert!((prod[(i, i)] - (est.sigma[i] / sb[i]).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn bootstrap_centering() {
        // The mean of θ̂ᵇ over resamples approaches the pooled estimate.
        let data = groups(2, 30, 0.0);
        let target = vv(TargetKind::C);
        let theta0 = pooled_target(target, &data).unwrap();
        let offsets = offsets_of(&data);
        let b = 5000;
        let draws: Vec<Vec<f64>> = (0..b)
            .into_par_iter()
            .map(|i| {
                let idx = resample_index(TestMethod::Bootstrap, data.n(), make_rng(8, 0).child(i));
                estimates_on(target, data.pooled(), &idx, &offsets).unwrap().theta
            })
            .collect();
        for g in 0..2 {
            let vals: Vec<f64> = draws.iter().map(|t| t[g]).collect();
            let mean = vals.iter().sum::<f64>() / b as f64;
            let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (b - 1) as f64).sqrt();
            // Plug-in bias is O(1/n); allow it on top of the Monte Carlo error.
            assert!((mean - theta0).abs() < 3.0 * sd / (b as f64).sqrt() + 0.02 * theta0, "{mean} vs {theta0}");
        }
    }

    #[test]
    fn method_parsing() {
        assert_eq!("boot".parse::<MctMethod>().unwrap(), MctMethod::Bootstrap);
        assert!("permutation".parse::<MctMethod>().is_err());
    }

    #[test]
    fn rows_and_json() {
        let data = groups(3, 20, 0.2);
        let r = asymptotic_mct(vv(TargetKind::C), &data, &tukey_contrasts(3).unwrap(), 0.05, 10_000, make_rng(2, 0))
            .unwrap();
        let rows = r.rows();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].contrast, "2-1");
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"critical_value\""));
        assert!(!json.contains("reference"));
        let back: MctResult = serde_json::from_str(&json).unwrap();
        assert_eq!(back.t, r.t);
        assert!(back.reference.is_empty());
    }
}
