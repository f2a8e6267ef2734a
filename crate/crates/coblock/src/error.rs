use thiserror::Error;

/// Failures surfaced to callers. Bookkeeping bugs (count underflow, label
/// out of range) are panics, not variants: they are not recoverable states.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{file}:{line}: {msg}")]
    Parse { file: String, line: usize, msg: String },

    /// Cell value outside the model's domain. Coordinates are 1-based.
    #[error("cell ({row},{col}): {msg}")]
    Domain { row: usize, col: usize, msg: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn parse(file: impl Into<String>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { file: file.into(), line, msg: msg.into() }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
