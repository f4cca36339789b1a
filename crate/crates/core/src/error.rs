use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside the domain of the routine it was passed to.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// The argument of a special function is outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative or adaptive routine ran out of budget.
    #[error("no convergence: partial result {partial:e}, error estimate {error_estimate:e}")]
    NonConvergence { partial: f64, error_estimate: f64 },

    /// The relay-to-destination hop carries no power (G = 0 or P_r = 0).
    #[error("degenerate relay: relay gain and relay power must both be positive")]
    DegenerateRelay,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerical machinery rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonConvergence { .. } | Error::Domain(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
