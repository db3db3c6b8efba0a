use std::path::PathBuf;

/// Errors produced anywhere in the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("row {row}, column `{column}`: cannot parse {value:?} as a number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}, column `{column}`: non-finite value {value:?}")]
    NonFinite {
        row: usize,
        column: String,
        value: String,
    },

    #[error("column `{0}` not found in header")]
    MissingColumn(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("not enough data: need at least {needed}, got {got} ({what})")]
    NotEnoughData {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("rank-deficient design matrix (condition estimate {condition:.3e})")]
    RankDeficient { condition: f64 },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value in {0}")]
    NonFiniteValue(String),

    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("criterion state is missing {0}")]
    MissingState(&'static str),

    #[error("model format error at line {line}: {msg}")]
    Format { line: usize, msg: String },

    #[error("refit failed at stream step {step}: {source}")]
    Refit {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("method `{method}` failed in {failed} of {total} runs (first error: {first})")]
    BenchmarkFailed {
        method: String,
        failed: usize,
        total: usize,
        first: String,
    },

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
