use thiserror::Error;

/// Error type shared across the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("constraint violation: {0}")]
    ConstraintViolation(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("obstacle violation: {0}")]
    ObstacleViolation(String),

    #[error("Picard iteration did not converge after {iters} iterations (last residual {residual:.3e})")]
    NonConvergence {
        iters: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("unsupported modulus: {0}")]
    UnsupportedModulus(String),

    #[error("ill-posed comparison case: {0}")]
    IllPosedCase(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Exit-status contract: 0 success, 2 config error, 3 numeric failure, 4 suite failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) | Error::ConstraintViolation(_) => 2,
            Error::NonConvergence { .. } | Error::NumericFailure(_) => 3,
            Error::IllPosedCase(_) => 4,
            _ => 2,
        }
    }
}
