use thiserror::Error;

use crate::machine::Space;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("machine number {value} out of range for ({space}) space: must be below {bound}")]
    OutOfRange { value: u64, bound: u64, space: Space },

    #[error("unsupported space: {0}")]
    UnsupportedSpace(String),

    #[error("malformed transition table: {0}")]
    MalformedTable(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("sequence too short: need {needed} terms, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("machine did not halt on input {x}: {status}")]
    NotHalted { x: u64, status: String },

    #[error("dimension undefined: {0}")]
    Undefined(String),

    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
