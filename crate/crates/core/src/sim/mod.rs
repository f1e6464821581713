//! Monte Carlo harness for empirical size and power of the global and
//! multiple contrast tests.
//!
//! Replicate `r` of a study draws its data from `RngStream::new(seed, r)` and
//! gives the test with ordinal `j` the sub-stream `child(j)`; resample `b` of
//! that test then uses `child(j).child(b)`. Targets `C` and `B` of the same
//! study therefore see identical data and identical resampling indices.
//!
//! Non-normal data are built coordinate-wise: `X = μ + Σ^{1/2}Z` with `Z`
//! having independent standardized coordinates (`t₅/√(5/3)` or
//! `(χ²₁₀ − 10)/√20`). This fixes the mean and covariance exactly but is not
//! a multivariate t or chi-square law.

mod config;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rand_distr::{ChiSquared, Distribution as _, StandardNormal, StudentT};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{parse_config, preset, Study, PRESETS, PRESET_MU_SEED};

use crate::design::{ContrastSpec, FactorLayout};
use crate::error::{McvError, Result};
use crate::estimation::{mcv, McvVariant, Sample};
use crate::numkit::{normal_quantile, sym_sqrt, Matrix, RngStream, MIN_MC_DRAWS};
use crate::scalar::Scalar;
use crate::tests_global::{global_test, GroupedData, Target, TargetKind, TestMethod};
use crate::tests_multiple::{mct, MctMethod};

/// `(1−ρ)·I_d + ρ·11ᵀ`, positive definite for `−1/(d−1) < ρ < 1`.
pub fn compound_symmetric<T: Scalar>(d: usize, rho: f64) -> Result<Matrix<T>> {
    if d == 0 {
        return Err(McvError::EmptyMatrix);
    }
    let lower = if d > 1 { -1.0 / (d as f64 - 1.0) } else { f64::NEG_INFINITY };
    if !(rho > lower && rho < 1.0) {
        return Err(McvError::InvalidArgument(format!("correlation {rho} outside ({lower}, 1) for d = {d}")));
    }
    let mut m = Matrix::filled(d, d, T::lit(rho));
    for i in 0..d {
        m[(i, i)] = T::one();
    }
    Ok(m)
}

/// `a·Σ` with `a = (target/current)²`, so that the variant's MCV equals `target`.
pub fn scale_to_target<T: Scalar>(variant: McvVariant, mu: &[T], sigma: &Matrix<T>, target: T) -> Result<Matrix<T>> {
    if !(target > T::zero()) || !target.is_finite() {
        return Err(McvError::InvalidArgument(format!("target MCV must be positive, got {target}")));
    }
    let current = mcv(variant, mu, sigma)?;
    let ratio = target / current;
    Ok(sigma.scale(ratio * ratio))
}

/// Law of the standardized innovations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Innovation {
    Normal,
    Student5,
    Chisq10,
}

impl Innovation {
    pub const ALL: [Innovation; 3] = [Innovation::Normal, Innovation::Student5, Innovation::Chisq10];

    pub fn name(self) -> &'static str {
        match self {
            Innovation::Normal => "normal",
            Innovation::Student5 => "student5",
            Innovation::Chisq10 => "chisq10",
        }
    }
}

impl fmt::Display for Innovation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Innovation {
    type Err = McvError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" | "gaussian" | "n" => Ok(Innovation::Normal),
            "student5" | "t5" | "t" => Ok(Innovation::Student5),
            "chisq10" | "chi2" | "chisq" | "chi10" => Ok(Innovation::Chisq10),
            _ => Err(McvError::InvalidArgument(format!("unknown distribution `{s}`"))),
        }
    }
}

/// Draws zero-mean unit-variance innovations of one law.
#[derive(Debug, Clone, Copy)]
enum Sampler {
    Normal,
    Student(StudentT<f64>),
    Chisq(ChiSquared<f64>),
}

impl Sampler {
    fn new(kind: Innovation) -> Self {
        match kind {
            Innovation::Normal => Sampler::Normal,
            Innovation::Student5 => Sampler::Student(StudentT::new(5.0).expect("five degrees of freedom")),
            Innovation::Chisq10 => Sampler::Chisq(ChiSquared::new(10.0).expect("ten degrees of freedom")),
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Normal => StandardNormal.sample(rng),
            Sampler::Student(t) => t.sample(rng) / (5.0f64 / 3.0).sqrt(),
            Sampler::Chisq(c) => (c.sample(rng) - 10.0) / 20.0f64.sqrt(),
        }
    }
}

/// One data-generating group: `n` draws of `μ + root·Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupModel<T> {
    pub label: String,
    pub mu: Vec<T>,
    pub sigma: Matrix<T>,
    pub n: usize,
    root: Matrix<T>,
}

impl<T: Scalar> GroupModel<T> {
    pub fn new(label: impl Into<String>, mu: Vec<T>, sigma: Matrix<T>, n: usize) -> Result<Self> {
        if !sigma.is_square() || sigma.rows() != mu.len() {
            return Err(McvError::DimensionMismatch {
                expected: format!("{0}x{0} covariance", mu.len()),
                found: format!("{}x{}", sigma.rows(), sigma.cols()),
            });
        }
        if !sigma.is_symmetric(T::lit(1e-10) * sigma.max_abs().max(T::one())) {
            return Err(McvError::InvalidArgument("covariance must be symmetric".into()));
        }
        let root = sym_sqrt(&sigma, T::lit(1e-10))?;
        Ok(Self { label: label.into(), mu, sigma, n, root })
    }

    fn draw<R: Rng + ?Sized>(&self, sampler: &Sampler, rng: &mut R) -> Sample<T> {
        let d = self.mu.len();
        let mut z = vec![T::zero(); d];
        let mut data = Vec::with_capacity(self.n * d);
        for _ in 0..self.n {
            for zi in z.iter_mut() {
                *zi = T::lit(sampler.draw(rng));
            }
            for a in 0..d {
                data.push(self.mu[a] + crate::numkit::dot(self.root.row(a), &z));
            }
        }
        Sample::new(Matrix::from_vec(self.n, d, data).expect("generated values are finite"))
    }
}

/// `n` observations `μ + Σ^{1/2}Z` with standardized innovations of law `dist`.
pub fn generate_sample<T: Scalar, R: Rng + ?Sized>(
    dist: Innovation,
    mu: &[T],
    sigma: &Matrix<T>,
    n: usize,
    rng: &mut R,
) -> Result<Sample<T>> {
    let model = GroupModel::new("", mu.to_vec(), sigma.clone(), n)?;
    Ok(model.draw(&Sampler::new(dist), rng))
}

/// A test run in every replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TestId {
    #[serde(rename = "asymptotic")]
    WaldAsymptotic,
    #[serde(rename = "permutation")]
    WaldPermutation,
    #[serde(rename = "bootstrap")]
    WaldBootstrap,
    #[serde(rename = "mct-asymptotic")]
    MctAsymptotic,
    #[serde(rename = "mct-bootstrap")]
    MctBootstrap,
}

impl TestId {
    pub const ALL: [TestId; 5] = [
        TestId::WaldAsymptotic,
        TestId::WaldPermutation,
        TestId::WaldBootstrap,
        TestId::MctAsymptotic,
        TestId::MctBootstrap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TestId::WaldAsymptotic => "asymptotic",
            TestId::WaldPermutation => "permutation",
            TestId::WaldBootstrap => "bootstrap",
            TestId::MctAsymptotic => "mct-asymptotic",
            TestId::MctBootstrap => "mct-bootstrap",
        }
    }

    /// Stable index of the test's random sub-stream within a replicate.
    pub fn ordinal(self) -> u64 {
        self as u64
    }

    pub fn is_resampling(self) -> bool {
        matches!(self, TestId::WaldPermutation | TestId::WaldBootstrap | TestId::MctBootstrap)
    }
}

impl fmt::Display for TestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestId {
    type Err = McvError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        TestId::ALL
            .into_iter()
            .find(|t| t.name() == key)
            .or(match key.as_str() {
                "asy" | "wald-asymptotic" => Some(TestId::WaldAsymptotic),
                "perm" | "wald-permutation" => Some(TestId::WaldPermutation),
                "boot" | "wald-bootstrap" => Some(TestId::WaldBootstrap),
                "mct-asy" => Some(TestId::MctAsymptotic),
                "mct-boot" => Some(TestId::MctBootstrap),
                _ => None,
            })
            .ok_or_else(|| McvError::InvalidArgument(format!("unknown test `{s}`")))
    }
}

/// Settings shared by parametric scenarios and moment-mimicking studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub distribution: Innovation,
    pub variant: McvVariant,
    pub target_kind: TargetKind,
    pub alpha: f64,
    pub replicates: usize,
    pub resamples: usize,
    pub mc_draws: usize,
    pub seed: u64,
    pub tests: Vec<TestId>,
    /// Contrasts for the Wald-type tests.
    pub contrasts: ContrastSpec,
    /// Contrasts for the multiple contrast tests.
    pub mct_contrasts: ContrastSpec,
    pub layout: Option<FactorLayout>,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            distribution: Innovation::Normal,
            variant: McvVariant::Vv,
            target_kind: TargetKind::C,
            alpha: 0.05,
            replicates: 1000,
            resamples: 500,
            mc_draws: 100_000,
            seed: 1,
            tests: vec![TestId::WaldPermutation, TestId::WaldBootstrap, TestId::MctBootstrap],
            contrasts: ContrastSpec::KSample,
            mct_contrasts: ContrastSpec::Tukey,
            layout: None,
        }
    }
}

impl RunSettings {
    pub fn target(&self) -> Target {
        Target::new(self.target_kind, self.variant)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(McvError::Config(m));
        if !(0.0..1.0).contains(&self.alpha) {
            return bad(format!("alpha must lie in [0, 1), got {}", self.alpha));
        }
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        if self.tests.is_empty() {
            return bad("at least one test is required".into());
        }
        if self.resamples == 0 && self.tests.iter().any(|t| t.is_resampling()) {
            return bad("resamples must be at least 1 for resampling tests".into());
        }
        if self.mc_draws < MIN_MC_DRAWS && self.tests.contains(&TestId::MctAsymptotic) {
            return bad(format!("mc_draws must be at least {MIN_MC_DRAWS}"));
        }
        Ok(())
    }
}

/// Parametric scenario: shared `μ`, compound-symmetric `Σ` rescaled per group
/// so that group `i` has MCV `targets[i]` under `settings.variant`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub d: usize,
    pub n: Vec<usize>,
    pub rho: f64,
    pub mu: Vec<f64>,
    pub targets: Vec<f64>,
    pub settings: RunSettings,
}

impl ScenarioConfig {
    pub fn k(&self) -> usize {
        self.targets.len()
    }

    pub fn validate(&self) -> Result<()> {
        self.settings.validate()?;
        let bad = |m: String| Err(McvError::Config(m));
        if self.k() < 2 {
            return bad(format!("need at least 2 groups, got {}", self.k()));
        }
        if self.n.len() != self.k() {
            return bad(format!("{} group sizes for {} groups", self.n.len(), self.k()));
        }
        if let Some(n) = self.n.iter().find(|&&n| n < 2) {
            return bad(format!("group size {n} below 2"));
        }
        if self.targets.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return bad("target MCVs must be positive".into());
        }
        if !(0.0..1.0).contains(&self.rho) {
            return bad(format!("rho must lie in [0, 1), got {}", self.rho));
        }
        if self.d == 0 || self.mu.len() != self.d {
            return bad(format!("mu has {} entries for d = {}", self.mu.len(), self.d));
        }
        Ok(())
    }

    /// Whether all targets coincide, i.e. the data satisfy the k-sample null.
    pub fn is_null_layout(&self) -> bool {
        self.targets.windows(2).all(|w| w[0] == w[1])
    }

    pub fn group_models(&self) -> Result<Vec<GroupModel<f64>>> {
        self.validate()?;
        let base = compound_symmetric::<f64>(self.d, self.rho)?;
        self.targets
            .iter()
            .zip(&self.n)
            .enumerate()
            .map(|(i, (&t, &n))| {
                let sigma = scale_to_target(self.settings.variant, &self.mu, &base, t)?;
                GroupModel::new((i + 1).to_string(), self.mu.clone(), sigma, n)
            })
            .collect()
    }
}

/// Per-group moments supplied directly, e.g. estimated from real data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMoments {
    pub label: String,
    pub mu: Vec<f64>,
    pub sigma: Matrix<f64>,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MimicConfig {
    pub name: String,
    pub groups: Vec<GroupMoments>,
    pub settings: RunSettings,
}

/// 95% and 99% binomial bands for the rejection rate of a level-α test over
/// `replicates` runs, rounded outward to 0.1 percentage points.
pub fn binomial_band(alpha: f64, replicates: usize, level: f64) -> (f64, f64) {
    let z = normal_quantile(0.5 + level / 2.0).unwrap_or(f64::INFINITY);
    let half = z * (alpha * (1.0 - alpha) / replicates.max(1) as f64).sqrt();
    let lo = ((alpha - half) * 1000.0 + 1e-9).floor() / 1000.0;
    let hi = ((alpha + half) * 1000.0 - 1e-9).ceil() / 1000.0;
    (lo.max(0.0), hi.min(1.0))
}

/// Outcome of one test over all replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSummary {
    pub test: TestId,
    pub rejections: usize,
    /// Replicates whose observed statistic was computable.
    pub valid_replicates: usize,
    /// Replicates whose observed statistic was not computable; excluded.
    pub degenerate_replicates: usize,
    /// Degenerate resamples summed over valid replicates.
    pub degenerate_resamples: usize,
    /// `None` when no replicate was valid.
    pub proportion: Option<f64>,
    pub band95: (f64, f64),
    pub band99: (f64, f64),
    /// Global p-values of the valid replicates, in replicate order.
    #[serde(skip)]
    pub p_values: Vec<f64>,
}

impl TestSummary {
    pub fn in_band95(&self) -> bool {
        self.proportion.is_some_and(|p| p >= self.band95.0 && p <= self.band95.1)
    }

    pub fn in_band99(&self) -> bool {
        self.proportion.is_some_and(|p| p >= self.band99.0 && p <= self.band99.1)
    }

    /// Rejection rate of `p < alpha` on the same replicates.
    pub fn proportion_at(&self, alpha: f64) -> Option<f64> {
        if self.p_values.is_empty() {
            return None;
        }
        Some(self.p_values.iter().filter(|&&p| p < alpha).count() as f64 / self.p_values.len() as f64)
    }
}

/// Descriptive fields echoed into every output row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyInfo {
    pub name: String,
    pub kind: String,
    pub k: usize,
    pub d: usize,
    pub n: Vec<usize>,
    pub rho: Option<f64>,
    pub targets: Vec<f64>,
    pub null_layout: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub info: StudyInfo,
    pub settings: RunSettings,
    pub tests: Vec<TestSummary>,
    pub wall_clock_secs: f64,
}

/// One line of the tidy output (one per study × test); excludes wall-clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRow {
    pub scenario: String,
    pub kind: String,
    pub variant: String,
    pub target: String,
    pub distribution: String,
    pub k: usize,
    pub d: usize,
    pub n: String,
    pub rho: Option<f64>,
    pub targets: String,
    pub null_layout: Option<bool>,
    pub alpha: f64,
    pub replicates: usize,
    pub resamples: usize,
    pub seed: u64,
    pub test: String,
    pub rejections: usize,
    pub valid_replicates: usize,
    pub proportion: Option<f64>,
    pub band95_lower: f64,
    pub band95_upper: f64,
    pub in_band95: bool,
    pub band99_lower: f64,
    pub band99_upper: f64,
    pub in_band99: bool,
    pub degenerate_replicates: usize,
    pub degenerate_resamples: usize,
}

fn join<V: ToString>(v: &[V]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
}

impl ScenarioResult {
    pub fn summary(&self, test: TestId) -> Option<&TestSummary> {
        self.tests.iter().find(|t| t.test == test)
    }

    pub fn rows(&self) -> Vec<ScenarioRow> {
        let s = &self.settings;
        self.tests
            .iter()
            .map(|t| ScenarioRow {
                scenario: self.info.name.clone(),
                kind: self.info.kind.clone(),
                variant: s.variant.to_string(),
                target: s.target_kind.to_string(),
                distribution: s.distribution.to_string(),
                k: self.info.k,
                d: self.info.d,
                n: join(&self.info.n),
                rho: self.info.rho,
                targets: join(&self.info.targets),
                null_layout: self.info.null_layout,
                alpha: s.alpha,
                replicates: s.replicates,
                resamples: s.resamples,
                seed: s.seed,
                test: t.test.to_string(),
                rejections: t.rejections,
                valid_replicates: t.valid_replicates,
                proportion: t.proportion,
                band95_lower: t.band95.0,
                band95_upper: t.band95.1,
                in_band95: t.in_band95(),
                band99_lower: t.band99.0,
                band99_upper: t.band99.1,
                in_band99: t.in_band99(),
                degenerate_replicates: t.degenerate_replicates,
                degenerate_resamples: t.degenerate_resamples,
            })
            .collect()
    }
}

/// Result of one test on one replicate; `None` for an incomputable observed statistic.
#[derive(Debug, Clone, Copy)]
struct Outcome {
    reject: bool,
    p_value: f64,
    degenerate_resamples: usize,
}

fn run_one_test(
    test: TestId,
    settings: &RunSettings,
    data: &GroupedData<f64>,
    wald_h: &crate::design::ContrastMatrix<f64>,
    mct_h: &crate::design::ContrastMatrix<f64>,
    rng: RngStream,
) -> Result<Option<Outcome>> {
    let target = settings.target();
    let res = match test {
        TestId::WaldAsymptotic | TestId::WaldPermutation | TestId::WaldBootstrap => {
            let method = match test {
                TestId::WaldAsymptotic => TestMethod::Asymptotic,
                TestId::WaldPermutation => TestMethod::Permutation,
                _ => TestMethod::Bootstrap,
            };
            global_test(method, target, data, wald_h, settings.alpha, settings.resamples, rng).map(|r| Outcome {
                reject: r.reject,
                p_value: r.p_value,
                degenerate_resamples: r.resamples_degenerate,
            })
        }
        TestId::MctAsymptotic | TestId::MctBootstrap => {
            let (method, draws) = match test {
                TestId::MctAsymptotic => (MctMethod::Asymptotic, settings.mc_draws),
                _ => (MctMethod::Bootstrap, settings.resamples),
            };
            mct(method, target, data, mct_h, settings.alpha, draws, rng).map(|r| Outcome {
                reject: r.any_rejected(),
                p_value: r.global_p,
                degenerate_resamples: r.resamples_degenerate,
            })
        }
    };
    match res {
        Ok(o) => Ok(Some(o)),
        Err(e) if e.is_degeneracy() => Ok(None),
        Err(e) => Err(e),
    }
}

fn run_models(info: StudyInfo, models: &[GroupModel<f64>], settings: &RunSettings) -> Result<ScenarioResult> {
    settings.validate()?;
    let start = Instant::now();
    let k = models.len();
    let wald_h = settings.contrasts.build::<f64>(k, settings.layout.as_ref())?;
    let mct_h = settings.mct_contrasts.build::<f64>(k, settings.layout.as_ref())?;
    let sampler = Sampler::new(settings.distribution);
    let labels: Vec<String> = models.iter().map(|m| m.label.clone()).collect();
    let mut tests = settings.tests.clone();
    tests.sort();
    tests.dedup();

    let per_rep: Vec<Vec<Option<Outcome>>> = (0..settings.replicates)
        .into_par_iter()
        .map(|r| {
            let base = RngStream::new(settings.seed, r as u64);
            let mut gen = base.generator();
            let samples: Vec<Sample<f64>> = models.iter().map(|m| m.draw(&sampler, &mut gen)).collect();
            let data = GroupedData::from_samples(&samples, Some(labels.clone()))?;
            tests
                .iter()
                .map(|&t| run_one_test(t, settings, &data, &wald_h, &mct_h, base.child(t.ordinal())))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let band95 = binomial_band(settings.alpha, settings.replicates, 0.95);
    let band99 = binomial_band(settings.alpha, settings.replicates, 0.99);
    let summaries = tests
        .iter()
        .enumerate()
        .map(|(j, &test)| {
            let outcomes: Vec<Outcome> = per_rep.iter().filter_map(|rep| rep[j]).collect();
            let valid = outcomes.len();
            let degenerate = settings.replicates - valid;
            if degenerate > 0 {
                log::warn!("{}: {} of {} replicates degenerate for {test}", info.name, degenerate, settings.replicates);
            }
            let rejections = outcomes.iter().filter(|o| o.reject).count();
            TestSummary {
                test,
                rejections,
                valid_replicates: valid,
                degenerate_replicates: degenerate,
                degenerate_resamples: outcomes.iter().map(|o| o.degenerate_resamples).sum(),
                proportion: (valid > 0).then(|| rejections as f64 / valid as f64),
                band95,
                band99,
                p_values: outcomes.iter().map(|o| o.p_value).collect(),
            }
        })
        .collect();
    Ok(ScenarioResult {
        info,
        settings: settings.clone(),
        tests: summaries,
        wall_clock_secs: start.elapsed().as_secs_f64(),
    })
}

/// Size or power study for a parametric scenario.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioResult> {
    let models = cfg.group_models()?;
    let info = StudyInfo {
        name: cfg.name.clone(),
        kind: "scenario".into(),
        k: cfg.k(),
        d: cfg.d,
        n: cfg.n.clone(),
        rho: Some(cfg.rho),
        targets: cfg.targets.clone(),
        null_layout: Some(cfg.is_null_layout()),
    };
    run_models(info, &models, &cfg.settings)
}

/// Study with user-supplied per-group moments.
pub fn run_moment_mimic(cfg: &MimicConfig) -> Result<ScenarioResult> {
    if cfg.groups.len() < 2 {
        return Err(McvError::Config(format!("need at least 2 groups, got {}", cfg.groups.len())));
    }
    let d = cfg.groups[0].mu.len();
    let models = cfg
        .groups
        .iter()
        .map(|g| {
            if g.mu.len() != d {
                return Err(McvError::Config(format!(
                    "group `{}` has dimension {}, expected {d}",
                    g.label,
                    g.mu.len()
                )));
            }
            if g.n < 2 {
                return Err(McvError::Config(format!("group `{}` has size {} below 2", g.label, g.n)));
            }
            GroupModel::new(g.label.clone(), g.mu.clone(), g.sigma.clone(), g.n)
        })
        .collect::<Result<Vec<_>>>()?;
    let targets = models.iter().map(|m| mcv(cfg.settings.variant, &m.mu, &m.sigma)).collect::<Result<Vec<_>>>()?;
    let null = cfg.groups.windows(2).all(|w| w[0].mu == w[1].mu && w[0].sigma == w[1].sigma);
    let info = StudyInfo {
        name: cfg.name.clone(),
        kind: "mimic".into(),
        k: models.len(),
        d,
        n: cfg.groups.iter().map(|g| g.n).collect(),
        rho: None,
        targets,
        null_layout: Some(null),
    };
    run_models(info, &models, &cfg.settings)
}

pub fn run_study(study: &Study) -> Result<ScenarioResult> {
    match study {
        Study::Scenario(c) => run_scenario(c),
        Study::Mimic(c) => run_moment_mimic(c),
    }
}
