use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not strongly stable (estimated spectral radius {radius:.6} >= 1)")]
    NotStronglyStable { radius: f64 },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("target is not a steady state: residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    UnreachableTarget { residual: f64, tol: f64 },

    #[error("projection did not converge after {iterations} iterations (last movement {movement:.3e})")]
    ProjectionFailure { iterations: usize, movement: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, err: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            message: err.to_string(),
        }
    }
}
