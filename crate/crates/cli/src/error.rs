use mpss_core::MpssError;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Problem too large for the banded factorisation without `--force`.
    #[error("{0}")]
    Guardrail(String),

    #[error(transparent)]
    Core(#[from] MpssError),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Process exit status. 2 is left to clap for usage errors.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 3,
            CliError::Parse(_) => 4,
            CliError::Io { .. } => 7,
            CliError::Guardrail(_) => 8,
            CliError::Core(e) => match e {
                MpssError::InvalidArgument(_) => 3,
                MpssError::Parse(_) | MpssError::Dimension(_) => 4,
                MpssError::Divergence { .. } => 5,
                MpssError::Singular(_) => 6,
                MpssError::Io(_) => 7,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub(crate) fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(CliError::Config(msg.into()))
}

pub(crate) fn parse_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(CliError::Parse(msg.into()))
}
