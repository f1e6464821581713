//! Estimation and inference for multivariate coefficients of variation (MCV)
//! and their reciprocals, the standardized means, in k-sample and crossed
//! factorial designs.
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below fix the double-precision instantiation used by the
//! command-line tool.

// `!(x > 0)` guards deliberately reject NaN as well as non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compositional;
pub mod design;
pub mod error;
pub mod estimation;
pub mod numkit;
pub mod scalar;
pub mod sim;
pub mod tests_global;
pub mod tests_multiple;

pub use design::{ContrastMatrix, ContrastSpec, FactorLayout};
pub use error::{McvError, Result};
pub use estimation::{EstimateResult, McvVariant, Sample};
pub use numkit::{Matrix, RngStream};
pub use scalar::Scalar;
pub use tests_global::{GroupedData, Target, TargetKind, TestMethod, TestResult};
pub use tests_multiple::{MctMethod, MctResult};

pub type Matrix64 = numkit::Matrix<f64>;
pub type Matrix32 = numkit::Matrix<f32>;
pub type Sample64 = estimation::Sample<f64>;
pub type Sample32 = estimation::Sample<f32>;
pub type GroupedData64 = tests_global::GroupedData<f64>;
pub type GroupedData32 = tests_global::GroupedData<f32>;
pub type ContrastMatrix64 = design::ContrastMatrix<f64>;
pub type ContrastMatrix32 = design::ContrastMatrix<f32>;
pub type EstimateResult64 = estimation::EstimateResult<f64>;
pub type EstimateResult32 = estimation::EstimateResult<f32>;
