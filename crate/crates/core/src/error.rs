use thiserror::Error;

pub type Result<T, E = McvError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum McvError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("matrix dimensions must be positive")]
    EmptyMatrix,
    #[error("matrix is not positive semi-definite (eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("probability {0} out of range")]
    Probability(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("too few observations: n = {n}, need at least {min}")]
    TooFewObservations { n: usize, min: usize },

    // Moment conditions under which the MCV is defined. These are statistical
    // degeneracies rather than malformed input.
    #[error("mean vector zero")]
    ZeroMean,
    #[error("covariance matrix singular")]
    SingularCovariance,
    #[error("covariance matrix is zero (trace vanishes)")]
    ZeroTrace,
    #[error("quadratic form mean'·cov·mean vanishes")]
    ZeroQuadraticForm,
    #[error("asymptotic variance estimate negative ({0:e}); moments numerically inconsistent")]
    NegativeVariance(f64),
    #[error("contrast {0} has zero estimated variance")]
    ZeroContrastVariance(usize),

    #[error("contrast row {row} sums to {sum:e}, not zero")]
    ContrastRowSum { row: usize, sum: f64 },
    #[error("contrast row {0} is all zeros")]
    ZeroContrastRow(usize),
    #[error("factor effect must name at least one factor")]
    EmptyEffect,
    #[error("unknown factor `{0}`")]
    UnknownFactor(String),
    #[error("composition has non-positive part {0}")]
    NonPositivePart(f64),
    #[error("configuration error: {0}")]
    Config(String),
}

impl McvError {
    /// True for failures of the moment assumptions (as opposed to bad input).
    pub fn is_degeneracy(&self) -> bool {
        matches!(
            self,
            McvError::ZeroMean
                | McvError::SingularCovariance
                | McvError::ZeroTrace
                | McvError::ZeroQuadraticForm
                | McvError::NegativeVariance(_)
                | McvError::ZeroContrastVariance(_)
        )
    }
}
