//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: row {row} has {found} columns, expected {expected}")]
    RaggedRow {
        path: PathBuf,
        row: usize,
        found: usize,
        expected: usize,
    },

    #[error("{path}: row {row}, column {column}: cannot parse {value:?} as a real number")]
    NonNumericCell {
        path: PathBuf,
        row: usize,
        column: usize,
        value: String,
    },

    #[error("non-finite feature at row {row}, column {column}")]
    NonFiniteFeature { row: usize, column: usize },

    #[error("dataset {name:?} has no data rows")]
    EmptyDataset { name: String },

    #[error("label column {column:?} not found in header {header:?}")]
    LabelColumnNotFound { column: String, header: Vec<String> },

    #[error("label column index {index} out of range for {columns} columns")]
    LabelColumnOutOfRange { index: usize, columns: usize },

    #[error(
        "positive labels {positive:?} must cover some but not all of the observed labels {observed:?}"
    )]
    InvalidPositiveLabels {
        positive: Vec<String>,
        observed: Vec<String>,
    },

    #[error("feature matrix has {rows} rows but there are {labels} labels")]
    RowLabelMismatch { rows: usize, labels: usize },

    #[error("class {label:+} has {count} examples, need at least {required}")]
    ClassTooSmall {
        label: i8,
        count: usize,
        required: usize,
    },

    #[error("minority fraction {target} is unreachable by under-sampling alone")]
    UnreachableImbalanceTarget { target: f64 },

    #[error("k = {k} exceeds the {n} stored training examples")]
    KTooLarge { k: usize, n: usize },

    #[error("requested {requested} hyperparameter combinations, grid holds {available}")]
    GridExhausted { requested: usize, available: usize },

    #[error("prediction and label vectors differ in length: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("label {value} is outside {{-1, +1}}")]
    InvalidLabel { value: i8 },

    #[error("objective or gradient became non-finite at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("invalid hyperparameter: {0}")]
    InvalidHyperParam(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown dataset {name:?} (registry lists: {known:?})")]
    UnknownDataset { name: String, known: Vec<String> },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}
