use thiserror::Error;

/// Errors raised by the numerical laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field contains a non-finite sample at node {index}")]
    NonFinite { index: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain too small: tail level {tail:.3e} exceeds {limit:.0e} ({detail})")]
    TailViolation { tail: f64, limit: f64, detail: String },

    #[error("linear solve failed: relative residual {residual:.3e} above {tolerance:.0e}")]
    SolverResidual { residual: f64, tolerance: f64 },

    #[error("singular matrix at pivot {0}")]
    Singular(usize),

    #[error("eigen-iteration stagnated after {iterations} iterations (last change {change:.3e})")]
    Stagnation { iterations: usize, change: f64 },

    #[error("reduced ODE blow-up at t = {t}: {detail}")]
    Blowup { t: f64, detail: String },

    #[error("tracking failure: {0}")]
    Tracking(String),

    #[error("ill-conditioned fit: {0}")]
    IllConditioned(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("numerical fault: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
