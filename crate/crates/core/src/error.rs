use std::path::PathBuf;

/// Errors raised anywhere in the scoring pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("no rows")]
    NoRows,

    #[error("row {row}: expected {expected} fields, found {found}")]
    ColumnCount {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("row {row}, column `{column}`: cannot parse `{value}` as a number")]
    ParseNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("split produced an empty partition (train {train}, test {test})")]
    EmptyPartition { train: usize, test: usize },

    #[error("only one class present in the labels")]
    SingleClass,

    #[error("covariance is not positive definite even after regularization up to {ridge:e}")]
    NotPositiveDefinite { ridge: f64 },

    #[error("row {row}: every component log-density is -inf")]
    ZeroDensity { row: usize },

    #[error("component {component} collapsed (effective size {mass:e})")]
    DegenerateComponent { component: usize, mass: f64 },

    #[error("all {restarts} EM restarts failed; last error: {last}")]
    AllRestartsFailed { restarts: usize, last: Box<Error> },

    #[error("no candidate component count could be fitted")]
    NoCandidateFitted,

    #[error("non-finite loss at epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True for failures of the numerical routines, as opposed to bad input data.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NotPositiveDefinite { .. }
            | Error::ZeroDensity { .. }
            | Error::DegenerateComponent { .. }
            | Error::AllRestartsFailed { .. }
            | Error::NoCandidateFitted
            | Error::Diverged { .. } => true,
            Error::Stage { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
