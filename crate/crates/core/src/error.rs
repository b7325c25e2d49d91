use thiserror::Error;

/// Errors produced by reachability computations, geometry, optimization and
/// configuration handling.
#[derive(Debug, Error)]
pub enum ReachError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid interval: t0 = {t0} exceeds t1 = {t1}")]
    Interval { t0: f64, t1: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix exponential leaves the floating-point range (scaled norm {norm:e})")]
    NumericRange { norm: f64 },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("target state lies outside the reachable subspace (range residual {residual:e})")]
    Unreachable { residual: f64 },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ReachError {
    /// True for errors caused by bad input rather than by a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            ReachError::Config(_)
                | ReachError::Dimension(_)
                | ReachError::Interval { .. }
                | ReachError::Domain(_)
                | ReachError::Unsupported(_)
        )
    }
}

impl From<serde_json::Error> for ReachError {
    fn from(err: serde_json::Error) -> Self {
        ReachError::Config(err.to_string())
    }
}

impl From<csv::Error> for ReachError {
    fn from(err: csv::Error) -> Self {
        ReachError::Io(std::io::Error::other(err))
    }
}

pub type Result<T, E = ReachError> = std::result::Result<T, E>;
