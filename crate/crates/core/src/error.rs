use thiserror::Error;

/// Errors raised by the simulation core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid channel parameters: {0}")]
    InvalidParams(String),

    #[error("position index {index} is out of range (K = {max})")]
    OutOfRange { index: usize, max: usize },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("ensemble mismatch: {0}")]
    EnsembleMismatch(String),

    #[error("missing trajectory: {0}")]
    MissingTrajectory(String),

    #[error("malformed dump: {0}")]
    MalformedDump(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
