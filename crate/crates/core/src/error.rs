use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("non-finite value produced in {0}")]
    NonFinite(String),

    #[error("empty sequence passed to {0}")]
    EmptySequence(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("config {}key `{key}`: {msg}", line.map(|l| format!("line {l}, ")).unwrap_or_default())]
    Config { line: Option<usize>, key: String, msg: String },

    #[error("{path}: row {row}: {msg}")]
    Csv { path: PathBuf, row: usize, msg: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("NSE undefined: observations are constant or fewer than two")]
    UndefinedNse,

    #[error("training diverged at epoch {epoch}, batch {batch}")]
    Divergence { epoch: usize, batch: usize },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Configuration problems, as opposed to bad data or failed training.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::InvalidConfig(_) | Error::Config { .. })
    }

    pub fn is_data(&self) -> bool {
        matches!(self, Error::Csv { .. } | Error::Data(_) | Error::UndefinedNse | Error::Io(_) | Error::Checkpoint(_))
    }

    pub(crate) fn shape(op: &'static str, left: (usize, usize), right: (usize, usize)) -> Self {
        Error::ShapeMismatch { op, left, right }
    }
}
