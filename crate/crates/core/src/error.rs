use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: record {record}: {message}", path.display())]
    Format {
        path: PathBuf,
        /// 1-based record (line) number.
        record: usize,
        message: String,
    },

    #[error("{0}")]
    Invalid(String),

    #[error("shard {shard} failed on record {key:?}: {message}")]
    Shard {
        shard: usize,
        key: String,
        message: String,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, record: usize, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            record,
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::Invalid(message.into())
    }
}
