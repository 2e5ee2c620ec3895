use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("grids do not match")]
    GridMismatch,

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("solver did not converge after {iterations} iterations (gradient norm {grad_norm:.3e})")]
    NonConvergence { iterations: usize, grad_norm: f64 },

    #[error(
        "acceptance probability {value} outside [0,1]: certified smoothness constant is wrong"
    )]
    SmoothnessViolation { value: f64 },

    #[error("rejection sampler exceeded {cap} trials")]
    RunawayRejection { cap: usize },

    #[error("stale prox mode: optimality residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    StaleMode { residual: f64, tolerance: f64 },

    #[error("requested series {0:?} not present in report")]
    MissingSeries(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
