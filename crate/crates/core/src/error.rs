use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the porosity pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("gimbal height {gimbal_mm} mm is not above layer height {height_mm} mm")]
    LaserBelowBuild { gimbal_mm: f64, height_mm: f64 },

    #[error("incident angle {theta} rad is outside [0, pi/2)")]
    GrazingIncidence { theta: f64 },

    #[error("{0} must be at least one")]
    ZeroCount(&'static str),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("part id mismatch: {left} vs {right}")]
    PartMismatch { left: String, right: String },

    #[error("Cholesky factorization failed for {0}")]
    Factorization(String),

    #[error("SMO solver did not converge after {iterations} iterations (KKT gap {kkt_gap:e})")]
    NotConverged { iterations: usize, kkt_gap: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("negative pore diameter {0} um")]
    NegativeDiameter(f64),

    #[error("{n_folds} folds requested for {n_samples} samples (need 2 <= folds <= samples)")]
    FoldCount { n_folds: usize, n_samples: usize },

    #[error("error metric undefined: {0}")]
    MetricUndefined(&'static str),

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("degenerate effect axis for {0}: all values equal")]
    DegenerateAxis(String),

    #[error("{path}: missing column '{column}'")]
    MissingColumn { path: PathBuf, column: String },

    #[error("{path}: row {row}: column '{column}' is not a number: '{value}'")]
    NonNumeric {
        path: PathBuf,
        row: usize,
        column: String,
        value: String,
    },

    #[error("{path}: duplicate part_id '{id}' at rows {first} and {second}")]
    DuplicatePart {
        path: PathBuf,
        id: String,
        first: usize,
        second: usize,
    },

    #[error("part_id '{0}' has no matching record in the other input")]
    UnmatchedPart(String),

    #[error("{path}: row {row}: {message}")]
    InvalidRow {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("layout overflow: {0}")]
    LayoutOverflow(String),

    #[error("unsupported schema version {0}")]
    SchemaVersion(u32),

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

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Strips any fold wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Fold { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
