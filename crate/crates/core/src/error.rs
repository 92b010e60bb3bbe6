use std::path::PathBuf;

use thiserror::Error;

use crate::protocol::ProtocolError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: expected `key=value`")]
    Parse { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { key: String, line: usize },
    #[error("invalid value for `{key}`: {reason}")]
    InvalidValue { key: String, reason: String },
    #[error("trace {0} contains no values")]
    EmptyTrace(PathBuf),
    #[error("trace row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("{0} is not supported by this engine")]
    Unsupported(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(key: &str, reason: impl Into<String>) -> Self {
        Error::InvalidValue { key: key.to_string(), reason: reason.into() }
    }

    /// Whether the error stems from the scenario configuration rather than
    /// from I/O or a protocol fault.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::UnknownKey { .. }
                | Error::InvalidValue { .. }
                | Error::EmptyTrace(_)
                | Error::MalformedRow { .. }
                | Error::Unsupported(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
