use thiserror::Error;

/// Errors raised by the simulation modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("covariance factorization failed after jitter {jitter:e} (kernel ill-conditioned)")]
    IllConditionedKernel { jitter: f64 },

    #[error("query position {x} nm outside sampled domain [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },

    #[error("finite-difference step {dx} nm below interpolation resolution {min} nm")]
    StepTooSmall { dx: f64, min: f64 },

    #[error("integrator failure: state norm drifted by {drift:e}")]
    NormDrift { drift: f64 },

    #[error("Lindblad invariant violated: {0}")]
    Invariant(String),

    #[error("quadrature did not converge (relative change {change:e})")]
    Quadrature { change: f64 },

    #[error("grid spacing {spacing} nm exceeds the 1 nm limit")]
    GridTooCoarse { spacing: f64 },

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    EigenNonConvergence { iterations: usize, residual: f64 },

    #[error("tunnel coupling not applicable: {0}")]
    NotApplicable(String),

    #[error("realization panicked: {0}")]
    Panicked(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}:{line}: malformed row: {reason}")]
    MalformedRow { path: String, line: u64, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
