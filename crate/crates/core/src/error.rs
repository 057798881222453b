use thiserror::Error;

/// Errors raised by the estimation toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MpssError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A linear system that should be positive definite was not.
    #[error("singular system: {0}")]
    Singular(String),

    /// The objective blew up during an iterative fit.
    #[error(
        "solver diverged at iteration {iteration}: objective {objective:e} exceeds 10x its \
         running minimum {minimum:e}; try a smaller step size"
    )]
    Divergence {
        iteration: usize,
        objective: f64,
        minimum: f64,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for MpssError {
    fn from(err: std::io::Error) -> Self {
        MpssError::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, MpssError>;

pub(crate) fn dim_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(MpssError::Dimension(msg.into()))
}

pub(crate) fn arg_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(MpssError::InvalidArgument(msg.into()))
}
