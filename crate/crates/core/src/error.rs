use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("matrix decomposition did not converge")]
    NoConvergence,

    #[error("store is empty: maximum row norm is zero")]
    EmptyStore,

    #[error("zero vector: {0}")]
    ZeroVector(String),

    #[error("simulation needs {needed} amplitudes, over the cap of {cap}; use the analytic mode")]
    OverCap { needed: usize, cap: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("line {line}, field `{field}`: {message}")]
    Parse {
        line: usize,
        field: String,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
