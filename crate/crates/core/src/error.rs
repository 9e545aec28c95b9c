use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// A query whose arguments violate its preconditions.
    #[error("invalid query: {0}")]
    InvalidQuery(String),

    /// A vertex ordering that does not describe a well-formed path, cycle or power cycle.
    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    /// A divisibility condition needed for the requested spanning structure fails.
    #[error("divisibility: {what} (need {divisor} | {value})")]
    Divisibility { what: String, divisor: usize, value: usize },

    /// An exhaustive search ran out of its node budget; any partial result is invalid.
    #[error("search budget of {limit} nodes exhausted in {context}")]
    BudgetExhausted { context: String, limit: u64 },

    /// A constructive step (size vectors, partitions) could not satisfy its constraints.
    #[error("construction failed: {0}")]
    Construction(String),

    /// Malformed edge-list or JSON input.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid_query(msg: impl Into<String>) -> Error {
    Error::InvalidQuery(msg.into())
}

pub(crate) fn invalid_structure(msg: impl Into<String>) -> Error {
    Error::InvalidStructure(msg.into())
}
