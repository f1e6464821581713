//! Contrast matrices for k-sample and crossed factorial hypotheses.
//!
//! Groups in a factorial layout are ordered lexicographically by factor,
//! with the last factor varying fastest. For factors `A` (2 levels) and `E`
//! (3 levels) the group order is `(1,1), (1,2), (1,3), (2,1), (2,2), (2,3)`.
//! Data must be supplied in that order. Nested designs are not generated;
//! pass a hand-built matrix through [`validate_contrast`] instead.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{McvError, Result};
use crate::numkit::{kron, Matrix};
use crate::scalar::Scalar;

/// Absolute row-sum tolerance for contrast rows with unit ℓ¹ norm.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// `I_k − J_k/k`.
pub fn centering_matrix<T: Scalar>(k: usize) -> Result<Matrix<T>> {
    require_groups(k)?;
    let off = -T::one() / T::from_count(k);
    let mut p = Matrix::filled(k, k, off);
    for i in 0..k {
        p[(i, i)] += T::one();
    }
    Ok(p)
}

fn require_groups(k: usize) -> Result<()> {
    if k < 2 {
        return Err(McvError::InvalidArgument(format!("need at least 2 groups, got {k}")));
    }
    Ok(())
}

/// A validated contrast matrix: `r ≥ 1` nonzero rows, each summing to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastMatrix<T> {
    h: Matrix<T>,
    labels: Vec<String>,
}

impl<T: Scalar> ContrastMatrix<T> {
    pub fn h(&self) -> &Matrix<T> {
        &self.h
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Number of contrasts `r`.
    pub fn n_contrasts(&self) -> usize {
        self.h.rows()
    }

    /// Number of groups `k`.
    pub fn n_groups(&self) -> usize {
        self.h.cols()
    }

    pub fn row(&self, l: usize) -> &[T] {
        self.h.row(l)
    }

    pub fn into_parts(self) -> (Matrix<T>, Vec<String>) {
        (self.h, self.labels)
    }

    pub fn cast<U: Scalar>(&self) -> ContrastMatrix<U> {
        ContrastMatrix { h: self.h.cast(), labels: self.labels.clone() }
    }

    /// Replaces the labels; the count must match the row count.
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.h.rows() {
            return Err(McvError::DimensionMismatch {
                expected: format!("{} labels", self.h.rows()),
                found: format!("{} labels", labels.len()),
            });
        }
        self.labels = labels;
        Ok(self)
    }
}

/// Checks the contrast invariants and attaches default labels `c1, c2, …`.
pub fn validate_contrast<T: Scalar>(h: Matrix<T>) -> Result<ContrastMatrix<T>> {
    let tol_base = ROW_SUM_TOL.max(8.0 * T::epsilon().as_f64());
    for l in 0..h.rows() {
        let row = h.row(l);
        let l1: f64 = row.iter().map(|v| v.abs().as_f64()).sum();
        if l1 == 0.0 {
            return Err(McvError::ZeroContrastRow(l));
        }
        let sum: f64 = row.iter().map(|v| v.as_f64()).sum();
        if sum.abs() > tol_base * l1.max(1.0) {
            return Err(McvError::ContrastRowSum { row: l, sum });
        }
    }
    let labels = (1..=h.rows()).map(|l| format!("c{l}")).collect();
    Ok(ContrastMatrix { h, labels })
}

fn labelled<T: Scalar>(h: Matrix<T>, labels: Vec<String>) -> Result<ContrastMatrix<T>> {
    validate_contrast(h)?.with_labels(labels)
}

/// `P_k` as a contrast matrix; its null hypothesis is equality of all groups.
pub fn ksample_contrasts<T: Scalar>(k: usize) -> Result<ContrastMatrix<T>> {
    let labels = (1..=k).map(|i| format!("P{i}")).collect();
    labelled(centering_matrix(k)?, labels)
}

/// All-pairs differences; row for `i < j` is `e_j − e_i`, labelled `j-i`.
pub fn tukey_contrasts<T: Scalar>(k: usize) -> Result<ContrastMatrix<T>> {
    require_groups(k)?;
    let mut h = Matrix::zeros(k * (k - 1) / 2, k);
    let mut labels = Vec::with_capacity(h.rows());
    let mut l = 0;
    for i in 0..k {
        for j in i + 1..k {
            h[(l, i)] = -T::one();
            h[(l, j)] = T::one();
            labels.push(format!("{}-{}", j + 1, i + 1));
            l += 1;
        }
    }
    labelled(h, labels)
}

/// Many-to-one differences against group 1; row `j` is `e_{j+1} − e_1`.
pub fn dunnett_contrasts<T: Scalar>(k: usize) -> Result<ContrastMatrix<T>> {
    require_groups(k)?;
    let mut h = Matrix::zeros(k - 1, k);
    let mut labels = Vec::with_capacity(k - 1);
    for j in 1..k {
        h[(j - 1, 0)] = -T::one();
        h[(j - 1, j)] = T::one();
        labels.push(format!("{}-1", j + 1));
    }
    labelled(h, labels)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factor {
    pub name: String,
    pub levels: usize,
}

/// Crossed factors in data order; the last factor varies fastest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorLayout {
    factors: Vec<Factor>,
}

impl FactorLayout {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(McvError::InvalidArgument("layout needs at least one factor".into()));
        }
        for (i, f) in factors.iter().enumerate() {
            if f.levels < 2 {
                return Err(McvError::InvalidArgument(format!("factor `{}` needs at least 2 levels", f.name)));
            }
            if f.name.is_empty() || factors[..i].iter().any(|g| g.name == f.name) {
                return Err(McvError::InvalidArgument(format!("factor name `{}` empty or repeated", f.name)));
            }
        }
        Ok(Self { factors })
    }

    /// Unnamed factors with levels `a, e, …` get names `A, B, C, …`.
    pub fn from_levels(levels: &[usize]) -> Result<Self> {
        let factors =
            levels.iter().enumerate().map(|(i, &levels)| Factor { name: default_factor_name(i), levels }).collect();
        Self::new(factors)
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    /// Total number of groups `k`.
    pub fn n_groups(&self) -> usize {
        self.factors.iter().map(|f| f.levels).product()
    }

    fn position(&self, name: &str) -> Result<usize> {
        self.factors.iter().position(|f| f.name == name).ok_or_else(|| McvError::UnknownFactor(name.to_string()))
    }

    /// Zero-based level index of each factor for group `g`.
    pub fn levels_of(&self, mut g: usize) -> Vec<usize> {
        let mut out = vec![0; self.factors.len()];
        for (slot, f) in out.iter_mut().zip(&self.factors).rev() {
            *slot = g % f.levels;
            g /= f.levels;
        }
        out
    }
}

fn default_factor_name(i: usize) -> String {
    if i < 26 {
        char::from(b'A' + i as u8).to_string()
    } else {
        format!("F{}", i + 1)
    }
}

impl fmt::Display for FactorLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.factors.iter().map(|x| format!("{}={}", x.name, x.levels)).collect();
        f.write_str(&parts.join(","))
    }
}

/// Parses `A=2,E=3` (named) or `2x3` (default names `A`, `B`).
impl FromStr for FactorLayout {
    type Err = McvError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || McvError::InvalidArgument(format!("cannot parse layout `{s}`"));
        if s.contains('=') {
            let factors = s
                .split(',')
                .map(|part| {
                    let (name, levels) = part.split_once('=').ok_or_else(bad)?;
                    let levels = levels.trim().parse().map_err(|_| bad())?;
                    Ok(Factor { name: name.trim().to_string(), levels })
                })
                .collect::<Result<Vec<_>>>()?;
            Self::new(factors)
        } else {
            let levels = s
                .split(['x', 'X', '*'])
                .map(|p| p.trim().parse::<usize>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()?;
            Self::from_levels(&levels)
        }
    }
}

/// Effect matrix for the factors in `effect` (main effect or interaction).
///
/// The Kronecker product over factors in layout order of `P_l` for factors in
/// the effect and `(1/l)·1ᵀ_l` for the others.
pub fn factorial_effect_matrix<T: Scalar, S: AsRef<str>>(
    layout: &FactorLayout,
    effect: &[S],
) -> Result<ContrastMatrix<T>> {
    if effect.is_empty() {
        return Err(McvError::EmptyEffect);
    }
    let mut included = vec![false; layout.factors.len()];
    for name in effect {
        included[layout.position(name.as_ref())?] = true;
    }
    let mut h = Matrix::<T>::identity(1);
    for (f, &inc) in layout.factors.iter().zip(&included) {
        let block = if inc {
            centering_matrix(f.levels)?
        } else {
            Matrix::filled(1, f.levels, T::one() / T::from_count(f.levels))
        };
        h = kron(&h, &block);
    }
    let names: Vec<&str> =
        layout.factors.iter().zip(&included).filter(|(_, &i)| i).map(|(f, _)| f.name.as_str()).collect();
    let tag = names.join(":");
    let labels = (1..=h.rows()).map(|l| format!("{tag}[{l}]")).collect();
    labelled(h, labels)
}

/// Contrast family selector used by the command line and configuration files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContrastSpec {
    KSample,
    Tukey,
    Dunnett,
    /// Factor names of a main effect or interaction.
    Factorial(Vec<String>),
}

impl ContrastSpec {
    /// Builds the matrix for `k` groups; factorial effects need a layout.
    pub fn build<T: Scalar>(&self, k: usize, layout: Option<&FactorLayout>) -> Result<ContrastMatrix<T>> {
        match self {
            ContrastSpec::KSample => ksample_contrasts(k),
            ContrastSpec::Tukey => tukey_contrasts(k),
            ContrastSpec::Dunnett => dunnett_contrasts(k),
            ContrastSpec::Factorial(effect) => {
                let layout =
                    layout.ok_or_else(|| McvError::InvalidArgument("factorial contrasts need a layout".into()))?;
                if layout.n_groups() != k {
                    return Err(McvError::DimensionMismatch {
                        expected: format!("{} groups from layout {layout}", layout.n_groups()),
                        found: format!("{k} groups"),
                    });
                }
                factorial_effect_matrix(layout, effect)
            }
        }
    }
}

impl FromStr for ContrastSpec {
    type Err = McvError;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "ksample" | "k-sample" | "centering" => Ok(ContrastSpec::KSample),
            "tukey" => Ok(ContrastSpec::Tukey),
            "dunnett" => Ok(ContrastSpec::Dunnett),
            _ => match s.trim().split_once(':') {
                Some((kind, effect)) if kind.eq_ignore_ascii_case("factorial") => {
                    let names: Vec<String> =
                        effect.split([':', '*', ',']).map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect();
                    if names.is_empty() {
                        return Err(McvError::EmptyEffect);
                    }
                    Ok(ContrastSpec::Factorial(names))
                }
                _ => Err(McvError::InvalidArgument(format!("unknown contrast family `{s}`"))),
            },
        }
    }
}
