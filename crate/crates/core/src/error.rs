use std::path::PathBuf;

use thiserror::Error;

use crate::classifier::external::TransportError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("token sequences use different tokenizer schemes")]
    SchemeMismatch,

    #[error("scale guard exceeded: {0}")]
    ScaleGuard(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("dataset contains a single class")]
    SingleClass,

    #[error("{path}:{line}: {message}")]
    DataRow {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("malformed file {path}: {message}")]
    Malformed { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("external classifier: {0}")]
    Transport(#[from] TransportError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for errors caused by oracle-scale guards.
    pub fn is_guard(&self) -> bool {
        matches!(self, Error::ScaleGuard(_))
    }

    /// True for errors caused by bad input data (rows, files, empty sets).
    pub fn is_data(&self) -> bool {
        matches!(
            self,
            Error::EmptyDataset
                | Error::SingleClass
                | Error::DataRow { .. }
                | Error::Malformed { .. }
                | Error::Io { .. }
        )
    }
}
