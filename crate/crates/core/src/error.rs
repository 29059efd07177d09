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

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown class label `{0}`")]
    UnknownClass(String),

    #[error("index {index} out of range for {what} of size {size}")]
    OutOfRange {
        what: String,
        index: usize,
        size: usize,
    },

    #[error("shape mismatch for {tensor}: expected {expected:?}, found {found:?}")]
    Shape {
        tensor: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("checkpoint format version {found} is not supported (expected {expected})")]
    Version { found: u64, expected: u64 },

    #[error("corrupted checkpoint: {0}")]
    Corrupted(String),

    #[error("word `{0}` does not occur in the corpus")]
    AbsentWord(String),

    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
