use crate::geometry::NormKind;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid dimension {0}: must be at least 1")]
    InvalidDimension(usize),
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("non-finite coordinate at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("{count} points have a zero nearest-neighbor distance (duplicate rows violate the continuous-density model)")]
    DuplicatePoints { count: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{points} points are too few for a Richardson split in dimension {dim}")]
    SampleTooSmall { points: usize, dim: usize },
    #[error("plan mismatch: {0}")]
    PlanMismatch(String),
    #[error("no bundled chi_{dim} value for the {norm} norm")]
    MissingChi { dim: usize, norm: NormKind },
    #[error("model has no trustworthy reference entropy: {0}")]
    NoReference(String),
    #[error("unsupported model: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
