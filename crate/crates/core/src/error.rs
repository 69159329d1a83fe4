use thiserror::Error;

/// Errors raised by the selected-inversion library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("shape mismatch in {op}: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        op: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("matrix is singular: negligible pivot at index {pivot}")]
    Singular { pivot: usize },

    #[error("singular Schur pivot at layer {layer}")]
    SingularPivot { layer: usize },

    #[error("singular pivot at layer {layer} (DDRGF level {level}, {location})")]
    DdrgfSingular {
        level: usize,
        location: String,
        layer: usize,
    },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
