use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("block index {index} out of range for {blocks} blocks")]
    BlockOutOfRange { index: usize, blocks: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid step {0}: steplengths must be positive and finite")]
    InvalidStep(f64),

    #[error("invalid regularizer: {0}")]
    InvalidRegularizer(String),

    #[error("invalid batch size {0}: at least one sample is required")]
    InvalidBatch(u64),

    #[error("invalid batch policy: {0}")]
    InvalidPolicy(String),

    #[error("invalid selection distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("batch size saturated at iteration {iteration}; sampling budget exceeded")]
    BudgetExceeded { iteration: u64 },

    #[error("iterate diverged at iteration {iteration}: {detail}")]
    Diverged { iteration: u64, detail: String },

    #[error("metric unavailable: {0}")]
    MissingMetric(String),

    #[error("rate fit failed: {0}")]
    RateFit(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("trajectory {index}: {source}")]
    Trajectory {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
