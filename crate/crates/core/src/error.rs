use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("pointwise autocorrelation of white noise is a distribution; use the kernel integral")]
    WhiteNoiseUndefined,

    #[error("quadrature did not converge: estimated error {error:.3e} exceeds tolerance {tolerance:.3e}")]
    QuadratureNonConvergence { error: f64, tolerance: f64 },

    #[error("covariance is not positive semidefinite: minimum eigenvalue {min_eigenvalue:.3e}")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("{0} outside its domain")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("qubit position {position} out of range for a {qubits}-qubit register")]
    PositionOutOfRange { position: usize, qubits: usize },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("ensemble is empty")]
    EmptyEnsemble,

    #[error("trajectory step {dt:e} is coarser than transit_time/50 = {limit:e}")]
    StepTooCoarse { dt: f64, limit: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
