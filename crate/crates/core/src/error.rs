use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the simulator, controllers, learning code and the
/// experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid network: {0}")]
    Network(String),

    #[error("invalid flow: {0}")]
    Flow(String),

    #[error("phase {phase} is not defined at intersection {intersection}")]
    UnknownPhase { intersection: usize, phase: usize },

    #[error("duration {duration}s outside [{low}, {high}]")]
    DurationOutOfRange { duration: u32, low: u32, high: u32 },

    #[error("invalid sensing parameter: {0}")]
    Sensing(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("backward called before any forward pass was recorded")]
    EmptyTape,

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("scenario: {0}")]
    Scenario(String),

    #[error("unknown controller `{0}`")]
    UnknownController(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

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
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
