use std::io;
use std::path::PathBuf;

/// Errors raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {message} at line {line}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("structure error: {0}")]
    Structure(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("exact enumeration infeasible: {cost} terms exceeds the limit of {limit}")]
    Infeasible { cost: f64, limit: f64 },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn arg(message: impl Into<String>) -> Self {
        Error::Argument(message.into())
    }
}
