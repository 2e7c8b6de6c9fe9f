use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (relative asymmetry {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("inner-product matrix is not positive definite (probe Rayleigh quotient {quotient:.3e})")]
    NotPositiveDefinite { quotient: f64 },

    #[error("eigensolver did not converge after {iterations} iterations (best residuals {residuals:?})")]
    NoConvergence {
        iterations: usize,
        residuals: Vec<f64>,
    },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("broken discretization: {0}")]
    Discretization(String),

    #[error("transverse mode {index} is degenerate (lambda = {lambda:.6e}); coupling constants are not well defined")]
    DegenerateMode { index: usize, lambda: f64 },

    #[error("twist profile constraint violated: {what} (value {value:.3e})")]
    Constraint { what: String, value: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
