//! Crate-wide error type.

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{context}: expected dimension {expected}, got {got}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        got: usize,
    },

    #[error("degenerate vector (norm below 1e-12): {context}")]
    DegenerateVector { context: String },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("{what} out of range: {value} (limit {limit})")]
    OutOfRange {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error(
        "record '{id}': requested {requested} views, only {available} match the source filter"
    )]
    InsufficientViews {
        id: String,
        requested: usize,
        available: usize,
    },

    #[error("duplicate id '{0}'")]
    DuplicateId(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation failed for record '{record}', field '{field}': {message}")]
    Validation {
        record: String,
        field: String,
        message: String,
    },

    #[error("unsupported format version {found} (supported: {supported})")]
    Version { found: u32, supported: u32 },

    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),

    #[error("anchor gallery is missing labels: {labels:?}")]
    MissingAnchor { labels: Vec<String> },

    #[error("record '{id}' has no caption embedding")]
    MissingCaption { id: String },

    #[error("config mismatch: {0}")]
    ConfigMismatch(String),

    #[error("dataset split is empty")]
    EmptyDataset,

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dim(context: impl Into<String>, expected: usize, got: usize) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
            expected,
            got,
        }
    }

    pub(crate) fn validation(
        record: impl Into<String>,
        field: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Error::Validation {
            record: record.into(),
            field: field.into(),
            message: message.into(),
        }
    }
}
