use thiserror::Error;

#[derive(Debug, Error)]
pub enum BanditError {
    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("matrix is not symmetric positive definite")]
    SingularMatrix,

    #[error("action set is empty")]
    EmptyActionSet,

    #[error("action norm {norm} exceeds bound L = {bound}")]
    ActionNormExceeded { norm: f64, bound: f64 },

    #[error("reward {reward} outside [0, {max}]")]
    RewardOutOfRange { reward: f64, max: f64 },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("chosen action is not a member of the action set")]
    ChosenNotInSet,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("link derivative minimum {min} is not positive on [-LS, LS]")]
    DegenerateLink { min: f64 },

    #[error("malformed CSV at row {row}: {message}")]
    MalformedCsv { row: usize, message: String },

    #[error("expected at least {expected} columns, found {found}")]
    MissingColumns { expected: usize, found: usize },

    #[error("column {column} has zero variance")]
    ZeroVarianceColumn { column: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = BanditError> = std::result::Result<T, E>;
