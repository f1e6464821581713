//! Dense-matrix utilities, distribution functions and random streams shared by
//! the statistical modules.

pub mod dist;
pub mod linalg;
pub mod matrix;
pub mod mvn;
pub mod rng;

pub use dist::{chisq_cdf, chisq_quantile, chisq_sf, normal_cdf, normal_quantile};
pub use linalg::{numeric_rank, pinv, pinv_with_rank, svd, sym_sqrt, symmetric_eigen, Cholesky, Svd, SymmetricEigen};
pub use matrix::{dot, kron, vec, Matrix};
pub use mvn::{max_abs_reference, mvn_equicoordinate_quantile, MaxReference, MIN_MC_DRAWS};
pub use rng::{make_rng, RngStream};
