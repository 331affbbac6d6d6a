use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("numerical error: {message} (error estimate {estimate:e})")]
    Numerical { message: String, estimate: f64 },

    #[error("generation error: {0}")]
    Generation(String),

    #[error("refusing brute force: subset_count = {count} exceeds the limit of {limit}")]
    TooManySubsets { count: String, limit: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
