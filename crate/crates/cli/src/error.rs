use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Numerical {
        context: String,
        #[source]
        source: photon_memory::Error,
    },
}

impl CliError {
    /// 1 for configuration problems, 2 for numerical failures and I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } => 1,
            Self::Numerical { source: photon_memory::Error::InvalidParameter { .. }, .. } => 1,
            Self::Io { .. } | Self::Numerical { .. } => 2,
        }
    }

    /// Extra guidance printed after the error message.
    pub fn advice(&self) -> Option<&'static str> {
        match self {
            Self::Numerical { source: photon_memory::Error::Unstable { .. }, .. } => {
                Some("the integration blew up; lower step_scale or audit_tol, or raise n_zeta")
            }
            Self::Numerical { source: photon_memory::Error::NotConverged { .. }, .. } => {
                Some("raise max_iter or loosen tol")
            }
            _ => None,
        }
    }
}

pub(crate) trait Context<T> {
    fn context(self, what: impl Into<String>) -> Result<T, CliError>;
}

impl<T> Context<T> for photon_memory::Result<T> {
    fn context(self, what: impl Into<String>) -> Result<T, CliError> {
        self.map_err(|source| CliError::Numerical { context: what.into(), source })
    }
}
