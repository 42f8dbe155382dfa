use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller passed an argument outside the operation's domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A structure or experiment was configured with unusable parameters.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Malformed input data, located by line and (optionally) field.
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: u64,
        field: Option<String>,
        message: String,
    },

    #[error("trace holds {available} distinct flows, {requested} requested")]
    InsufficientFlows { requested: usize, available: usize },

    #[error("cannot open {}: {source}", path.display())]
    Open {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
