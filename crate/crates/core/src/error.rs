use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input: bad shapes, non-finite entries, out-of-range indices
    /// or parameters.
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("spectral radius {radius} is not below 1; infinite-horizon Gramian does not exist")]
    Unstable { radius: f64 },

    #[error("spectral radius is zero; cannot rescale")]
    ZeroRadius,

    #[error("Lyapunov iteration did not converge after {iterations} iterations (relative update {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("Gramian is singular (lambda_min = {lambda_min:e}); system is not controllable")]
    Uncontrollable { lambda_min: f64 },

    #[error("target node {node} is unreachable from the driver set (W_ii = {w_ii:e})")]
    Unreachable { node: usize, w_ii: f64 },

    #[error("Gramian is not positive semidefinite (lambda_min = {lambda_min:e}, trace = {trace:e})")]
    NotPsd { lambda_min: f64, trace: f64 },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("realization {index}: {source}")]
    Realization {
        index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by numerical failure rather than bad input.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::Unstable { .. }
            | Error::ZeroRadius
            | Error::NoConvergence { .. }
            | Error::Uncontrollable { .. }
            | Error::Unreachable { .. }
            | Error::NotPsd { .. }
            | Error::Numeric(_) => true,
            Error::Realization { source, .. } => source.is_numeric(),
            Error::Validation(_) | Error::Io { .. } | Error::Parse { .. } => false,
        }
    }
}
