use alloc::string::String;

/// Errors raised by the core model.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid record for patient {patient}: {reason}")]
    InvalidRecord { patient: String, reason: String },

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch: expected {expected} covariates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid quantile levels: {0}")]
    InvalidLevels(String),

    #[error("prediction {value} at position {index} is outside [0, 1]")]
    PredictionOutOfRange { index: usize, value: f64 },

    #[error("landmark {landmark} lies beyond the grid end {grid_end}; refit with a grid that extends past it")]
    LandmarkBeyondGrid { landmark: f64, grid_end: f64 },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("sampler cache incoherent at tree {tree}, row {row}: cached {cached}, fresh {fresh}")]
    CacheIncoherent {
        tree: usize,
        row: usize,
        cached: f64,
        fresh: f64,
    },
}

pub type Result<T> = core::result::Result<T, Error>;
