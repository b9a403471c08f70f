use std::path::PathBuf;

use thiserror::Error;

use crate::autodiff::Op;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("capacity exceeded: {requested} qubits requested, at most {max} supported")]
    Capacity { requested: usize, max: usize },

    #[error("non-finite value produced by {op:?} (tape node {node})")]
    NonFinite { op: Op, node: usize },

    #[error("non-finite gradient at parameter {index}")]
    NonFiniteGradient { index: usize },

    #[error("training diverged at epoch {epoch}, batch {batch}: loss = {loss}")]
    Divergence { epoch: usize, batch: usize, loss: f64 },

    #[error("unknown id {0:?}")]
    UnknownId(String),

    #[error("bad magic bytes in {0}")]
    BadMagic(PathBuf),

    #[error("{path}:{line}: vector has dimension {got}, expected {expected}")]
    StoreDimension {
        path: PathBuf,
        line: usize,
        expected: usize,
        got: usize,
    },

    #[error("duplicate id {0:?}")]
    DuplicateId(String),

    #[error("truncated file {0}")]
    Truncated(PathBuf),

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("check failed: {0}")]
    CheckFailed(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end, grouped by category.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 3,
            Error::BadMagic(_)
            | Error::StoreDimension { .. }
            | Error::DuplicateId(_)
            | Error::Truncated(_)
            | Error::Parse { .. }
            | Error::Json(_)
            | Error::UnknownId(_) => 4,
            Error::Domain(_) | Error::Dimension { .. } | Error::Config(_) | Error::Capacity { .. } => 5,
            Error::CheckFailed(_) => 6,
            Error::NonFinite { .. } | Error::NonFiniteGradient { .. } | Error::Divergence { .. } => 7,
        }
    }
}
