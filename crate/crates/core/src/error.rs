use thiserror::Error;

/// Errors produced by the numerical engines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("quadrature did not converge: estimate {estimate:e}, achieved error {achieved:e}, target {target:e}")]
    QuadratureNonConvergence {
        estimate: f64,
        achieved: f64,
        target: f64,
    },

    #[error("covariance tolerance not met: estimate {estimate:e}, achieved error {achieved:e}")]
    ToleranceNotMet { estimate: f64, achieved: f64 },

    #[error("unsupported dimension {dim} for {what}")]
    UnsupportedDimension { dim: usize, what: &'static str },

    #[error("support violation: {0}")]
    SupportViolation(String),

    #[error("region exceeds torus bounds: {0}")]
    RegionOutOfBounds(String),

    #[error("all reweighting factors underflowed (minimum action {min_action:e}); use the exact Gaussian solve for large penalties")]
    DegenerateWeights { min_action: f64 },

    #[error("sample budget exhausted after {samples} samples: {reason}")]
    BudgetExhausted { samples: usize, reason: String },

    #[error("hermitian solve failed at momentum {momentum:?}")]
    SolverFailure { momentum: Vec<f64> },

    #[error("linear solver did not converge after {iterations} iterations (residual {residual:e})")]
    SolverNonConvergence { iterations: usize, residual: f64 },

    #[error("band does not separate probes: {0}")]
    BandDoesNotSeparate(String),

    #[error("schedule rejected: {0}")]
    InvalidSchedule(String),

    #[error("i/o failure: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
