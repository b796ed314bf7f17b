use thiserror::Error;

/// Errors raised by the optimization toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid search space: {0}")]
    InvalidSpace(String),

    #[error("configuration does not match search space: {0}")]
    ConfigMismatch(String),

    #[error("configuration is not from the KWS search space: missing dimension `{0}`")]
    NotKwsConfig(String),

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("invalid initializer specification: {0}")]
    InvalidInitializer(String),

    #[error("sobol dimension {requested} exceeds direction-number table ({available} dims)")]
    SobolDimension { requested: usize, available: usize },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("kernel matrix is not positive definite even with maximal jitter")]
    NotPositiveDefinite,

    #[error("invalid front: {0}")]
    InvalidFront(String),

    #[error("degenerate normalization bounds: {0}")]
    DegenerateBounds(String),

    #[error("search space exhausted: every configuration has already been evaluated")]
    SpaceExhausted,

    #[error("empty input: {0}")]
    Empty(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("budget {budget} does not exceed initializer cost {init_cost}")]
    BudgetTooSmall { budget: usize, init_cost: usize },

    #[error("invalid samples: {0}")]
    InvalidSamples(String),

    #[error("unknown output format `{0}`")]
    UnknownFormat(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
