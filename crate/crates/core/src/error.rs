use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An estimator was handed no observations.
    #[error("no data: {0}")]
    Empty(&'static str),

    #[error("invalid input: {0}")]
    Invalid(String),

    /// The data cannot support the requested computation (zero range,
    /// too few uncensored units, ...).
    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("probability {0} is outside (0, 1)")]
    Probability(f64),

    #[error("{}{}: {message}", path.display(), line.map(|l| format!(":{l}")).unwrap_or_default())]
    Ingest {
        path: PathBuf,
        line: Option<u64>,
        message: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }

    /// Short category label used by the command-line front end.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Empty(_) | Error::Invalid(_) | Error::Probability(_) => "input",
            Error::Degenerate(_) => "data",
            Error::Ingest { .. } => "ingestion",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}
