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

    #[error("{}: row {row}: {message}", path.display())]
    Parse {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("document `{id}` has no tokens after normalization")]
    EmptyDocument { id: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("input of length {len} is shorter than filter height {height}")]
    TooShort { len: usize, height: usize },

    #[error("no unmasked position left to pool over")]
    AllMasked,

    #[error("weak classifier h={height} diverged (non-finite parameters) at epoch {epoch}")]
    Diverged { height: usize, epoch: usize },

    #[error("corrupt or incompatible artifact: {0}")]
    Format(String),

    #[error("{variant}/{trait_}/round {round}: {source}")]
    Job {
        variant: String,
        trait_: String,
        round: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-greppable class used by the command-line front end.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::EmptyDataset | Error::EmptyDocument { .. } | Error::TooShort { .. } => "data",
            Error::Config(_) => "config",
            Error::Shape(_) | Error::AllMasked => "shape",
            Error::Diverged { .. } => "train",
            Error::Format(_) => "format",
            Error::Job { source, .. } => source.class(),
        }
    }
}
