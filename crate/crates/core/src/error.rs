use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("table must have at least one row")]
    EmptyTable,

    #[error("row {row} has {found} cells, expected {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },

    #[error("cell ({row}, {col}) holds code {code} outside the column alphabet")]
    InvalidCell { row: usize, col: usize, code: u32 },

    #[error("duplicate name {0:?}")]
    DuplicateName(String),

    #[error("column set is empty")]
    EmptyColumnSet,

    #[error("unknown column {0}")]
    UnknownColumn(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("malformed ciphertext: {0}")]
    MalformedCiphertext(String),

    #[error("malformed plaintext: {0}")]
    MalformedPlaintext(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("data error at line {line}: {reason}")]
    Data { line: u64, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
