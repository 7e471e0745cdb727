use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point is outside the domain at coordinate {index}")]
    OutOfDomain { index: usize },
    #[error("point duplicates design point {existing} within tolerance")]
    DuplicatePoint { existing: usize },
    #[error("too few design points: need at least {needed}, have {have}")]
    TooFewPoints { needed: usize, have: usize },
    #[error("correlation matrix is not positive definite even with nugget {nugget:e}")]
    SingularCorrelation { nugget: f64 },
    #[error("pool exhausted: requested {requested} points, {available} admissible")]
    PoolExhausted { requested: usize, available: usize },
    #[error("dimension {dim} exceeds the {max} supported by the Sobol table")]
    DimensionUnsupported { dim: usize, max: usize },
    #[error("unknown test function `{0}`")]
    UnknownFunction(String),
    #[error("objective evaluation failed: {0}")]
    Evaluation(#[from] crate::objective::EvalError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("malformed data: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
