use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors produced across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] io::Error),

    #[error("missing resource: {}", .0.display())]
    MissingResource(PathBuf),

    #[error("line {line}: malformed header: {reason}")]
    MalformedHeader { line: usize, reason: String },

    #[error("line {line}: row has {found} values, expected {expected}")]
    RowLength {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("line {line}: duplicate token `{token}`")]
    DuplicateToken { line: usize, token: String },

    #[error("line {line}: non-numeric entry `{value}`")]
    NonNumeric { line: usize, value: String },

    #[error("line {line}: non-finite entry `{value}`")]
    NonFinite { line: usize, value: String },

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("invalid token `{0}`")]
    InvalidToken(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("expected a {expected} model, found {found}")]
    KindMismatch { expected: String, found: String },

    #[error("translation backend: {0}")]
    Backend(String),

    #[error("taxonomy: {0}")]
    Taxonomy(String),

    #[error("split failed: {0}")]
    SplitFailed(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("evaluation failed: {0}")]
    Evaluation(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{representation}: {source}")]
    Representation {
        representation: String,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
