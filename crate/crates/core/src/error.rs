use thiserror::Error;

/// Errors raised by the solvers, oracles, generators and the benchmark harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The line search pushed the curvature estimate past its ceiling.
    #[error(
        "curvature estimate M = {m:e} exceeded the ceiling {ceiling:e} at iteration {iteration}; \
         the objective likely violates the Lipschitz-gradient assumption"
    )]
    Nonsmooth { m: f64, ceiling: f64, iteration: usize },

    #[error("iteration budget of {0} exhausted before the stopping rule fired")]
    BudgetExhausted(usize),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    /// An oracle produced NaN or an infinity.
    #[error("non-finite value in {component}")]
    NonFinite { component: &'static str },

    #[error("exponent overflow: max exponent {max_exponent:.3} at gamma = {gamma:e}")]
    Overflow { gamma: f64, max_exponent: f64 },

    #[error("underflow in {0}; use log-domain scaling or a larger regularization")]
    Underflow(String),

    #[error("marginal {which} has a zero entry at index {index}; apply smoothing to the marginals first")]
    ZeroMarginal { which: &'static str, index: usize },

    #[error("malformed IDX data: {0}")]
    Idx(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
