use thiserror::Error;

/// Errors produced by the optimization library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid dimension {0}")]
    InvalidDimension(usize),

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("degenerate polynomial: all coefficients are zero")]
    DegeneratePolynomial,

    #[error("step must be positive, got {0}")]
    NonPositiveStep(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid datum index {index} for {count} data")]
    InvalidDatum { index: usize, count: usize },

    #[error("subproblem is not strongly convex: beta {beta} <= eta {eta}")]
    NonconvexSubproblem { beta: f64, eta: f64 },

    #[error("no subproblem solver for {family} on {problem} with regularizer {regularizer}")]
    UnsupportedCombination {
        family: String,
        problem: String,
        regularizer: String,
    },

    #[error("run diverged at step {step}")]
    Diverged { step: usize },

    #[error("envelope parameter {lambda} must lie in (0, 1/rho) with rho = {rho}")]
    EnvelopeParameter { lambda: f64, rho: f64 },

    #[error("tolerance {tol:e} not certified after {iterations} iterations (gap {gap:e})")]
    ToleranceNotMet {
        tol: f64,
        gap: f64,
        iterations: usize,
    },

    #[error("empty trajectory")]
    EmptyTrajectory,

    #[error("trajectory was not retained for this run")]
    TrajectoryNotRetained,

    #[error("empty search box")]
    EmptyBox,

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
