use std::path::PathBuf;

use thiserror::Error;

use crate::pneumatic::{Event, SystemState};

/// Errors produced anywhere in the modeling pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config parse error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("invalid value for `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("incompatible units: cannot convert {from} to {to}")]
    Unit { from: String, to: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("transition not allowed: {event:?} in state {state:?}")]
    Transition { state: SystemState, event: Event },

    #[error("ingest error at row {row}: {message}")]
    Ingest { row: usize, message: String },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("target unreachable (best residual {best_residual:.6} m)")]
    Unreachable { best_residual: f64 },

    #[error("scenario error at line {line}: {message}")]
    Scenario { line: usize, message: String },

    #[error("replay failed at line {line}: {source}")]
    Replay {
        line: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
