use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: expected {expected}, got {actual}")]
    Shape {
        op: &'static str,
        expected: String,
        actual: String,
    },

    #[error("softmax over an empty score vector")]
    EmptySoftmax,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid UTF-8 in corpus at byte offset {offset}")]
    InvalidUtf8 { offset: usize },

    #[error("vocabulary is empty after applying min-count {min_count}")]
    EmptyVocab { min_count: u64 },

    #[error("empty word")]
    EmptyWord,

    #[error("unknown character {ch:?} in word {word:?}")]
    UnknownChar { ch: char, word: String },

    #[error("character id {id} out of range for alphabet of size {size}")]
    CharIdOutOfRange { id: usize, size: usize },

    #[error("{what}: {detail}")]
    Unsupported { what: &'static str, detail: String },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{0}")]
    Data(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("not a model file (bad magic)")]
    BadMagic,

    #[error("model file version {found} not supported (reader understands {supported})")]
    Version { found: u32, supported: u32 },

    #[error("model file checksum mismatch (corrupted or truncated)")]
    Checksum,

    #[error("model file truncated or malformed: {0}")]
    Malformed(String),

    #[error("training diverged: non-finite loss at {stage} after {pairs} pairs (word {word:?})")]
    Diverged {
        stage: &'static str,
        pairs: u64,
        word: String,
    },
}

/// Coarse grouping used by the command line front end to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::Unsupported { .. } => ErrorClass::Config,
            Error::Diverged { .. } | Error::NonFinite(_) => ErrorClass::Numerical,
            _ => ErrorClass::Data,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(op: &'static str, expected: impl ToString, actual: impl ToString) -> Self {
        Error::Shape {
            op,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}
