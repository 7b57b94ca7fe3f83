use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not symmetric positive definite (min eigenvalue {min_eig:e}, max eigenvalue {max_eig:e})")]
    NotSpd { min_eig: f64, max_eig: f64 },
    #[error("matrix is singular or too ill-conditioned to invert")]
    Singular,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("Gaussian bridge breaks down at step {step}: {reason}")]
    InfeasibleBridge { step: usize, reason: String },
    #[error("degenerate bridge: {0}")]
    DegenerateBridge(String),
    #[error("index {index} out of range 0..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("system is not controllable over the horizon (Gramian not SPD)")]
    Uncontrollable,
    #[error("covariance steering did not converge after {iterations} iterations (relative terminal residual {residual:e})")]
    Infeasible { iterations: usize, residual: f64 },
    #[error("mixture weights off the simplex: {0}")]
    BadMarginals(String),
    #[error("all component densities underflow at the query point")]
    DegenerateDensity,
    #[error("operation requires {expected} mode")]
    ModeMismatch { expected: &'static str },
    #[error("batch was generated under the {actual} scheme, expected {expected}")]
    SchemeMismatch {
        expected: &'static str,
        actual: &'static str,
    },
    #[error("batch carries no control inputs")]
    MissingControls,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
