use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("level {level} out of range (largest resolvable level is {max})")]
    Range { level: i32, max: i32 },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("instability: {excluded} of {total} trajectories left the finite range")]
    Unstable { excluded: usize, total: usize },

    #[error("fit refused: {0}")]
    FitRefused(String),

    #[error("diagnostic failure: {0}")]
    Diagnostic(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Configuration-class errors map to CLI exit code 2.
    pub fn is_configuration(&self) -> bool {
        matches!(
            self,
            Error::Parameter(_)
                | Error::Config(_)
                | Error::Range { .. }
                | Error::Usage(_)
                | Error::Resolution(_)
                | Error::Unsupported(_)
        )
    }
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Parameter(msg()))
    }
}
