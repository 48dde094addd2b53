use thiserror::Error;

/// Errors raised across the simulation and training stack.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: sizes, shapes, ranges, index collisions.
    #[error("configuration error: {0}")]
    Config(String),

    /// Qubit or output index out of range.
    #[error("index error: {0}")]
    Index(String),

    /// Malformed input values (non-finite angles, mismatched lengths).
    #[error("input error: {0}")]
    Input(String),

    /// A numeric integrity check failed (non-unitary gate, NaN loss, ...).
    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by the caller's configuration or inputs rather
    /// than by a numeric failure during a run.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Index(_) | Error::Input(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
