use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::kg::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("i/o error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("dataset failed validation: {0}")]
    Validation(ValidationReport),

    #[error("snapshots out of order: current time {current}, previous time {previous}")]
    OutOfOrder { current: usize, previous: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("missing centrality score for {0}")]
    MissingScore(String),

    #[error("layer plan does not partition the new triples: {0}")]
    InvalidPlan(String),

    #[error("non-finite {what} at time {time}, layer {layer}, epoch {epoch}")]
    NonFinite {
        what: String,
        time: usize,
        layer: usize,
        epoch: usize,
    },

    #[error("invalid growth schedule: {0}")]
    Schedule(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("checkpoint {}: {message}", path.display())]
    Checkpoint { path: PathBuf, message: String },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Coarse classification used by the command line front end to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Validation,
    Runtime,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::Schedule(_) => ErrorKind::Usage,
            Error::Parse { .. } | Error::Validation(_) | Error::InvalidPlan(_) => {
                ErrorKind::Validation
            }
            _ => ErrorKind::Runtime,
        }
    }
}
