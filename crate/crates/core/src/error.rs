//! Error types shared across the crate.

use thiserror::Error;

/// Everything that can go wrong while loading data, fitting models,
/// scoring, simulating, or running the benchmark harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: missing column `{0}`")]
    MissingColumn(String),
    #[error("parse error at data row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("fit error in {learner}: {message}")]
    Fit { learner: String, message: String },
    #[error("fit error in {learner} (repetition {repetition}, fold {fold}): {message}")]
    FitInFold {
        learner: String,
        repetition: usize,
        fold: usize,
        message: String,
    },
    #[error("all {0} learner triples failed; see diagnostics")]
    AllTriplesFailed(usize),
    #[error(
        "positivity violation: censoring survival {value:.3e} <= {floor:.1e} \
         at observation {observation}"
    )]
    Positivity {
        observation: usize,
        value: f64,
        floor: f64,
    },
    #[error("IPA undefined: null-model Brier score is zero")]
    UndefinedIpa,
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Annotate a fit error with its cross-validation cell.
    pub fn in_fold(self, repetition: usize, fold: usize) -> Error {
        match self {
            Error::Fit { learner, message } => Error::FitInFold {
                learner,
                repetition,
                fold,
                message,
            },
            other => other,
        }
    }

    /// Process exit code contract: 2 usage, 3 data/schema, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_) => 2,
            Error::MissingColumn(_)
            | Error::Parse { .. }
            | Error::EmptyInput(_)
            | Error::Io { .. }
            | Error::Csv(_)
            | Error::Json(_) => 3,
            _ => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn io_err(path: &std::path::Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}
