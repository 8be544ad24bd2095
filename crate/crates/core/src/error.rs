use thiserror::Error;

/// Errors raised by grid construction, the flux kernels, the integrators and
/// run persistence.
#[derive(Debug, Error)]
pub enum MuskatError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite flux sample at index {index}")]
    NonFiniteFlux { index: usize },

    #[error("time step {dt:e} exceeds the CFL limit {limit:e}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("chord-arc minimum {min:e} fell below the floor {floor:e}")]
    ChordArcViolation { min: f64, floor: f64 },

    #[error("no near-vertical tangent: min d(z1)/d(alpha) = {min_slope} exceeds tolerance {tol}")]
    NoCriticalPoint { min_slope: f64, tol: f64 },

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("malformed run log: {0}")]
    RunLog(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl MuskatError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        MuskatError::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, MuskatError>;
