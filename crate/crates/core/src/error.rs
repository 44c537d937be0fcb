use thiserror::Error;

pub type Result<T> = std::result::Result<T, PplError>;

/// Coarse classification used by front ends to pick exit codes and HTTP statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad parameters or configuration.
    Config,
    /// Input data could not be read or is unusable.
    Data,
    /// A numerical procedure failed.
    Numerical,
}

#[derive(Debug, Error)]
pub enum PplError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("empty sample: {0}")]
    EmptySample(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate triangulation: {0}")]
    DegenerateTriangulation(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("non-finite objective: {0}")]
    NonFiniteObjective(String),
    #[error("tuning failed: {0}")]
    TuningFailure(String),
    #[error("probability {p} is below the threshold quantile level {level}")]
    OutOfModel { p: f64, level: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl PplError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            PplError::InvalidArgument(_) | PplError::OutOfModel { .. } => ErrorKind::Config,
            PplError::Schema(_)
            | PplError::Parse { .. }
            | PplError::EmptySample(_)
            | PplError::Io(_)
            | PplError::Csv(_)
            | PplError::Json(_) => ErrorKind::Data,
            PplError::DegenerateTriangulation(_)
            | PplError::Domain(_)
            | PplError::NonFiniteObjective(_)
            | PplError::TuningFailure(_) => ErrorKind::Numerical,
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> PplError {
    PplError::InvalidArgument(msg.into())
}
