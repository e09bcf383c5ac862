use std::fmt;

/// Errors produced by the core library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An index, count or parameter fell outside its permitted range.
    #[error("{what} {value} out of range (expected {expected})")]
    OutOfRange {
        what: &'static str,
        value: String,
        expected: String,
    },

    /// A parameter combination that can never be valid.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Malformed tabular input.
    #[error("{location}: {reason}")]
    Parse { location: Location, reason: String },

    /// Malformed model file; `line` is 1-based.
    #[error("model file line {line}: {reason}")]
    Format { line: usize, reason: String },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    /// Input columns do not line up with a stored schema.
    #[error("schema mismatch at column {column}: {reason}")]
    Schema { column: usize, reason: String },

    /// The operation is undefined for the given data (e.g. inverting a
    /// quasi-constant attribute).
    #[error("undefined: {0}")]
    Undefined(String),
}

impl Error {
    pub(crate) fn out_of_range(
        what: &'static str,
        value: impl fmt::Display,
        expected: impl fmt::Display,
    ) -> Self {
        Error::OutOfRange {
            what,
            value: value.to_string(),
            expected: expected.to_string(),
        }
    }

    /// True for errors caused by caller-supplied parameters rather than data.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::OutOfRange { .. } | Error::InvalidArgument(_))
    }
}

/// Where in a CSV source a parse error happened. Rows are 1-based data rows
/// (the header is not counted); columns are 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Location {
    pub row: Option<usize>,
    pub column: Option<usize>,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.row, self.column) {
            (Some(r), Some(c)) => write!(f, "row {r}, column {c}"),
            (Some(r), None) => write!(f, "row {r}"),
            (None, Some(c)) => write!(f, "header column {c}"),
            (None, None) => write!(f, "input"),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
