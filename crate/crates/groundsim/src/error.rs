//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An environment, viewpoint, or episode id that does not exist.
    #[error("unknown {kind} id: {id}")]
    UnknownId { kind: &'static str, id: String },

    /// Procedural generation could not satisfy its constraints.
    #[error("generation failed: {0}")]
    Generation(String),

    /// Tensor shapes incompatible for the requested operation.
    #[error("dimension mismatch in {op}: {lhs:?} vs {rhs:?}")]
    Dimension {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    /// NaN or Inf encountered where a finite value is required.
    #[error("non-finite value in {0}")]
    Numeric(String),

    /// A token outside the dataset vocabulary.
    #[error("token not in vocabulary: {0}")]
    Vocabulary(String),

    /// A caller broke an API contract (e.g. candidate list without Stop).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Invalid run or training configuration.
    #[error("config error: {0}")]
    Config(String),

    /// A JSON artifact failed schema validation; the path is a JSON pointer.
    #[error("schema violation at {pointer}: {message}")]
    Schema { pointer: String, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
