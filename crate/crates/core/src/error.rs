use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A corpus line could not be parsed.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Input was well-formed but violates a data-model invariant.
    #[error("invalid input: {0}")]
    Validation(String),

    /// A model file is malformed or incompatible.
    #[error("model file: {0}")]
    ModelFormat(String),

    /// Training diverged or otherwise failed.
    #[error("training: {0}")]
    Training(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
