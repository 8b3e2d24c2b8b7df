use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("expected {expected} vertices, got {found}")]
    WrongVertexCount { expected: usize, found: usize },

    #[error("general position violated: {0}")]
    Degenerate(String),

    #[error("probability of point {index} is {value}; must lie strictly inside (0, 1)")]
    InvalidProbability { index: usize, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A measure/model/method combination outside what the engines support.
    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("input of size {n} exceeds the limit of {cap}")]
    TooLarge { n: usize, cap: usize },

    #[error("unknown point index {0}")]
    UnknownPoint(usize),

    #[error("point {0} is already marked")]
    AlreadyMarked(usize),

    #[error("{path}: row {row}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by the caller's choice of engine or parameters
    /// rather than by the data.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Unsupported(_) | Error::TooLarge { .. } | Error::InvalidArgument(_)
        )
    }
}
