use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid privacy budget epsilon={0}: must be finite and > 0")]
    InvalidEpsilon(f64),

    #[error("invalid window size {0}: must be at least {min}", min = crate::MIN_WINDOW)]
    InvalidWindowSize(usize),

    #[error("invalid threshold {0}: must be -1 (static) or >= 1")]
    InvalidThreshold(i64),

    #[error("length mismatch: {what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("dataset has {rows} rows; at least {min} are needed to fit the model", min = crate::MIN_WINDOW)]
    TooFewRows { rows: usize },

    #[error("row {row}: expected {expected} attributes, got {got}")]
    Arity {
        row: usize,
        expected: usize,
        got: usize,
    },

    #[error("row {row}, attribute {column}: non-finite value {value}")]
    NonFinite { row: usize, column: usize, value: f64 },

    #[error("degenerate normal system (condition estimate {condition:e})")]
    Singular { condition: f64 },

    #[error("window {window}, attribute {attribute}: {source}")]
    Window {
        window: usize,
        attribute: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("{0}")]
    Precondition(String),

    #[error("refusing to release {rows} buffered rows: below the {min}-row model minimum", min = crate::MIN_WINDOW)]
    BelowMinimum { rows: usize },

    #[error("csv line {line}, column {column}: {message}")]
    Parse {
        line: u64,
        column: usize,
        message: String,
    },

    #[error("empty input: no data rows")]
    EmptyInput,

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
