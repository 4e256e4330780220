use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot access {path}: {source}")]
    FileAccess {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("header mismatch: expected {expected:?}, found {found:?}")]
    HeaderMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },

    #[error("row {row}: cannot parse amount {value:?} as a finite number")]
    AmountParse { row: usize, value: String },

    #[error("row {row} has a missing value in column {column:?}; clean the dataset first")]
    MissingValue { row: usize, column: String },

    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{context}: expected length {expected}, got {got}")]
    LengthMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("k must be between 2 and the number of rows ({n_rows}), got {k}")]
    InvalidK { k: usize, n_rows: usize },

    #[error("silhouette requires at least two non-empty clusters")]
    SingleCluster,

    #[error("silhouette report is sampled and does not cover every row")]
    SilhouetteCoverage,

    #[error("unknown column {0:?}")]
    UnknownColumn(String),

    #[error("exact attribution supports at most {max} features, got {got}")]
    TooManyFeatures { max: usize, got: usize },

    #[error("background set is empty")]
    EmptyBackground,

    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Strips `Stage` wrappers so callers can match on the root cause.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}
