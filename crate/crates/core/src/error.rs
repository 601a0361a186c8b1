use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {reason}")]
    MalformedFile { path: PathBuf, reason: String },

    #[error("malformed record {index} in {path}: non-finite value")]
    MalformedRecord { path: PathBuf, index: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("oracle transport error: {0}")]
    Transport(String),

    /// The peer answered with something that does not follow the wire protocol.
    /// `raw` holds the offending line verbatim.
    #[error("oracle protocol error: {message} (payload: {raw:?})")]
    Protocol { message: String, raw: String },

    #[error("oracle evaluation budget of {budget} calls exhausted")]
    BudgetExhausted { budget: u64 },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn protocol(message: impl Into<String>, raw: impl Into<String>) -> Self {
        Error::Protocol {
            message: message.into(),
            raw: raw.into(),
        }
    }

    /// True for failures of the detector boundary (transport or protocol).
    pub fn is_oracle_failure(&self) -> bool {
        matches!(self, Error::Transport(_) | Error::Protocol { .. })
    }
}
