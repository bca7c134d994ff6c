use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the library.
///
/// [`Error::category`] groups them into the classes the command line maps to
/// exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: field `{field}`: {message}")]
    Parse {
        line: usize,
        field: &'static str,
        message: String,
    },
    #[error("unknown CEFR level `{0}`")]
    UnknownLevel(String),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{what} {index} out of range (len {len})")]
    OutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },
    #[error("checkpoint mismatch: {0}")]
    Mismatch(String),
    #[error("numerical failure: {0}")]
    NonFinite(String),
    #[error("band {band}: {source}")]
    Band {
        band: crate::Band,
        #[source]
        source: Box<Error>,
    },
}

/// Coarse error classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Usage,
    Data,
    Numerical,
}

impl Error {
    pub(crate) fn parse(line: usize, field: &'static str, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            field,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn category(&self) -> Category {
        match self {
            Error::Config(_) => Category::Usage,
            Error::NonFinite(_) => Category::Numerical,
            Error::Band { source, .. } => source.category(),
            _ => Category::Data,
        }
    }
}
