use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("out of domain: {0}")]
    OutOfDomain(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("invalid mobility law: {0}")]
    InvalidLaw(String),

    #[error(
        "ill-conditioned solve: condition estimate {condition:.3e}, boundary residual {residual:.3e} \
         (tolerance {tolerance:.3e}, {truncated} singular values truncated)"
    )]
    IllConditioned {
        condition: f64,
        residual: f64,
        tolerance: f64,
        truncated: usize,
    },

    #[error("topology change at step {step} (t = {t:.6e}): {detail}")]
    TopologyChange { step: usize, t: f64, detail: String },

    #[error("pair search failed: {0}")]
    SearchFailure(String),

    #[error("fillet too large: flat bottom ends at x = {flat_end:.6}, but x1 = {x1:.6}")]
    FilletTooLarge { flat_end: f64, x1: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Errors raised by numerics rather than by bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::IllConditioned { .. } | Error::TopologyChange { .. } | Error::SearchFailure(_)
        )
    }
}
