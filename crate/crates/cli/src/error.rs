use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] bbsi_core::Error),

    #[error(
        "oracle needs a dense {dim}x{dim} matrix, above the cap of {cap} (raise --oracle-cap)"
    )]
    OracleTooLarge { dim: usize, cap: usize },

    #[error(
        "validation failed: block ({row}, {col}) has relative error {error:e} > {tolerance:e}"
    )]
    ValidationFailed {
        row: usize,
        col: usize,
        error: f64,
        tolerance: f64,
    },

    #[error("{0}")]
    Usage(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;
