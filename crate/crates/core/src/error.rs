use thiserror::Error;

use crate::mode::SpinWave;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("spatial grid is not symmetric under zeta -> 1 - zeta")]
    AsymmetricGrid,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("cannot normalize a mode with zero norm")]
    ZeroNorm,

    #[error("power iteration did not converge after {iterations} iterations (last eigenvalue estimate {eta})")]
    NotConverged {
        iterations: usize,
        eta: f64,
        last: Box<SpinWave>,
    },

    #[error("spin wave has zero retrieval efficiency; no control can shape its output")]
    ZeroEfficiency,

    #[error("integration unstable at tau = {tau}: {detail}; use a smaller time step")]
    Unstable { tau: f64, detail: String },

    #[error("fast storage requires zero detuning, got delta = {0}")]
    DetunedFastStorage(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
