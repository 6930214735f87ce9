use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("fields live on different grids ({left} vs {right})")]
    DomainMismatch { left: String, right: String },

    #[error("covariance kernel is not positive semidefinite on this grid (jitter up to {jitter:e} failed)")]
    IndefiniteKernel { jitter: f64 },

    #[error("iteration did not converge after {iterations} steps")]
    NoConvergence { iterations: usize },

    #[error("growth function is not positive on [x0, ∞): largest root {root} ≥ x0 = {x0}")]
    NoFiniteBound { root: f64, x0: f64 },

    #[error("blow-up integral diverges: {0}")]
    DivergentIntegral(String),

    #[error("quadrature failed to reach tolerance (estimate {estimate:e})")]
    QuadratureTolerance { estimate: f64 },

    #[error("unknown criterion kind `{0}`")]
    UnknownCriterion(String),

    #[error("observable `{0}` is not available")]
    MissingObservable(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
