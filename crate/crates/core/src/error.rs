use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A latent coordinate or input lies outside the domain an operation accepts.
    #[error("domain error: {0}")]
    Domain(String),

    /// An integral that the operation needs does not converge.
    #[error("integrability error: {0}")]
    Integrability(String),

    /// Input is degenerate (zero graphon, empty graph, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Instance is too large for an exhaustive routine.
    #[error("{what}: n = {n} exceeds the exact threshold {max}; {hint}")]
    Size {
        what: &'static str,
        n: usize,
        max: usize,
        hint: &'static str,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A construction whose preconditions failed at run time.
    #[error("construction failed: {0}")]
    Construction(String),

    #[error("dimension mismatch: {0}")]
    Mismatch(String),

    #[error("parse error in {path}: {msg}")]
    Parse { path: String, msg: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
