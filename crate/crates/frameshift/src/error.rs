//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Dimension mismatch in a numeric operation; names both shapes.
    #[error("shape mismatch in {op}: expected {expected}, got {got}")]
    Shape {
        op: &'static str,
        expected: String,
        got: String,
    },

    /// A label outside the active label set, or a class index out of range.
    #[error("label error: {0}")]
    Label(String),

    /// Backward invoked on a tape with no recorded forward pass.
    #[error("tape error: {0}")]
    TapeState(String),

    /// A non-finite value was produced; names the offending parameter.
    #[error("numeric error: non-finite gradient for parameter `{param}`")]
    NonFinite { param: String },

    /// Any other numeric failure (bad probability vector, diverged loss, ...).
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Malformed input file; carries path and 1-based line number.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    #[error("config error: {0}")]
    Config(String),

    /// Quality annotation with the wrong number of scores, and similar.
    #[error("annotation error: {0}")]
    Annotation(String),

    /// Span or sentence indices outside the document.
    #[error("index error: {0}")]
    Index(String),

    #[error("balance error: {0}")]
    Balance(String),

    /// Empty token sequence where at least one token is required.
    #[error("input error: {0}")]
    Input(String),

    /// Cohen's kappa is undefined (expected agreement is 1).
    #[error("kappa undefined: both annotators constant and identical")]
    UndefinedKappa,

    /// Prediction/gold sequences of different lengths.
    #[error("alignment error: {0}")]
    Alignment(String),

    /// Feature extraction failed (e.g. empty vocabulary).
    #[error("feature error: {0}")]
    Feature(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
