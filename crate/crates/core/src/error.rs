use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not enough examples: requested {requested}, available {available}")]
    InsufficientData { requested: usize, available: usize },

    #[error("example is missing required field `{0}`")]
    MissingField(&'static str),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("non-finite loss ({0}): training diverged")]
    Diverged(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// Stable machine-readable code, used by the CLI on failure.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => {
                "INPUT_NOT_FOUND"
            }
            Error::Io { .. } => "IO_ERROR",
            Error::Parse { .. } => "PARSE_ERROR",
            Error::InvalidArgument(_) => "INVALID_ARGUMENT",
            Error::InsufficientData { .. } => "INSUFFICIENT_DATA",
            Error::MissingField(_) => "MISSING_FIELD",
            Error::EmptyInput(_) => "EMPTY_INPUT",
            Error::Diverged(_) => "TRAINING_DIVERGED",
            Error::InvalidModel(_) => "INVALID_MODEL",
        }
    }
}
