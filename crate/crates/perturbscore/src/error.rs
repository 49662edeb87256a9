//! Shared error type for the library.

use thiserror::Error;

/// Errors produced by catalog loading, data handling, scoring, and attacks.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error in {path}: {detail}")]
    CatalogParse { path: String, detail: String },

    #[error("duplicate feature name in catalog: {0}")]
    DuplicateName(String),

    #[error("column {0} not found")]
    MissingColumn(String),

    #[error("no usable rows after numeric coercion")]
    NoUsableRows,

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("feature alignment mismatch: {0}")]
    AlignmentMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate split: {0} side is empty")]
    DegenerateSplit(&'static str),

    #[error("only one class present; cannot undersample")]
    SingleClass,

    #[error("labels must be binary 0/1")]
    NonBinaryLabels,

    #[error("training diverged (non-finite loss at epoch {0})")]
    Diverged(usize),

    #[error("selection plan keeps no features")]
    EmptyKeepSet,

    #[error("attack allowed-set is empty")]
    EmptyAllowedSet,

    #[error("morph map references unknown feature: {0}")]
    UnknownMorphFeature(String),

    #[error("unsupported payload/format combination: {payload} as {format}")]
    UnsupportedFormat { payload: String, format: String },

    #[error("unsupported schema version {found}; this reader handles major version {expected}")]
    SchemaVersion { found: String, expected: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
