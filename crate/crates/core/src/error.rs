//! Error types shared by the crate.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    /// Case or scenario file could not be parsed. Carries file location info.
    #[error("parse error in {path}{}: {msg}", location.as_ref().map(|l| format!(" ({l})")).unwrap_or_default())]
    Parse {
        path: String,
        location: Option<String>,
        msg: String,
    },

    /// Model invariants violated. One message per violation.
    #[error("validation failed: {}", violations.join("; "))]
    Validation { violations: Vec<String> },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: String,
        expected: usize,
        got: usize,
    },

    #[error("index {index} out of range in {context} (limit {limit})")]
    IndexOutOfRange {
        context: String,
        index: usize,
        limit: usize,
    },

    /// A univariate coordinate subproblem has no finite minimizer.
    #[error("coordinate {coord} is unbounded below on its interval")]
    Unbounded { coord: String },

    /// A numeric evaluation overflowed or produced NaN.
    #[error("non-finite value encountered in {context}")]
    NonFinite { context: String },

    /// Input outside the domain of a formula, e.g. a log of a non-positive
    /// argument in the flop-budget bound.
    #[error("domain violation: {0}")]
    Domain(String),

    #[error("all-zero polynomial has no defined roots")]
    ZeroPolynomial,

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            location: None,
            msg: msg.into(),
        }
    }

    pub fn parse_at(
        path: impl Into<String>,
        location: impl Into<String>,
        msg: impl Into<String>,
    ) -> Self {
        Error::Parse {
            path: path.into(),
            location: Some(location.into()),
            msg: msg.into(),
        }
    }
}
