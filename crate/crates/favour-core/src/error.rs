//! Crate-wide error type.

use std::path::PathBuf;

/// Errors produced by the learning, estimation and harness code.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid configuration or malformed input data.
    #[error("configuration error: {0}")]
    Config(String),

    /// Dimension mismatch between two objects that must agree.
    #[error("dimension mismatch for {context}: expected {expected}, got {actual}")]
    Dimension {
        context: String,
        expected: usize,
        actual: usize,
    },

    /// Numerical failure (non-finite value, singular matrix, ...).
    #[error("numeric error: {0}")]
    Numeric(String),

    /// An iterative solver ran out of iterations. Carries the best iterate
    /// found so that callers can inspect how far the solve got.
    #[error(
        "optimizer did not converge after {iterations} iterations \
         (projected gradient norm {gradient_norm:.3e})"
    )]
    NonConvergence {
        iterations: usize,
        gradient_norm: f64,
        best_iterate: Vec<f64>,
        best_value: f64,
    },

    /// A per-user fit failed inside a population-level procedure.
    #[error("fit for user {user} failed: {source}")]
    UserFit {
        user: usize,
        #[source]
        source: Box<Error>,
    },

    /// Filesystem failure, annotated with the offending path.
    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// JSON (de)serialization failure, annotated with the offending path.
    #[error("invalid JSON at {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    /// Malformed exported results (CSV re-parse).
    #[error("malformed results file: {0}")]
    Results(String),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn dimension(context: impl Into<String>, expected: usize, actual: usize) -> Self {
        Error::Dimension {
            context: context.into(),
            expected,
            actual,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
