use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed CSV at row {row}: {message}")]
    Csv {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("{path}: file contains no data rows")]
    EmptyFile { path: PathBuf },

    #[error("{path}: label column {column} not found")]
    MissingColumn { path: PathBuf, column: String },

    #[error("{path}: row {row}, column '{column}': missing value")]
    MissingValue {
        path: PathBuf,
        row: usize,
        column: String,
    },

    #[error("{path}: row {row}, column '{column}': non-numeric value '{value}'")]
    NonNumeric {
        path: PathBuf,
        row: usize,
        column: String,
        value: String,
    },

    #[error("{path}: column '{column}': {message}")]
    LabelValues {
        path: PathBuf,
        column: String,
        message: String,
    },

    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("point is outside the unit cube")]
    OutsideUnitCube,

    #[error("cell too narrow to split on dimension {dimension}")]
    DegenerateCell { dimension: usize },

    #[error("unsupported {what} version {found} (expected {expected})")]
    VersionMismatch {
        what: &'static str,
        expected: u16,
        found: u16,
    },

    #[error("model file checksum mismatch")]
    Checksum,

    #[error("truncated record: needed {needed} more bytes")]
    Truncated { needed: usize },

    #[error("corrupt record: {0}")]
    Corrupt(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
