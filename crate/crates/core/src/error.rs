use thiserror::Error;

/// Errors raised by model construction, inference and design evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid rate {value} at node {node}")]
    InvalidRate { node: usize, value: f64 },

    #[error("initial state {initial} of node {node} conflicts with clamp to state {clamp}")]
    ClampConflict {
        node: usize,
        clamp: usize,
        initial: usize,
    },

    #[error("non-finite generator entry at ({row}, {col})")]
    NonFiniteGenerator { row: usize, col: usize },

    #[error("probability drift {drift:e} exceeds tolerance (integration step too coarse)")]
    NormalizationDrift { drift: f64 },

    #[error("invalid trajectory: {0}")]
    Trajectory(String),

    #[error("zero rate with positive transition count at node {node}")]
    ZeroRateWithCount { node: usize },

    #[error("invalid hyperparameter: {0}")]
    Hyperparameter(String),

    #[error("degenerate ground truth: {0}")]
    DegenerateTruth(String),

    #[error("observation at t={time} is incompatible with the model support")]
    IncompatibleObservation { time: f64 },

    #[error("optimizer failure: {0}")]
    Optimizer(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerical machinery as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFiniteGenerator { .. }
                | Error::NormalizationDrift { .. }
                | Error::ZeroRateWithCount { .. }
                | Error::IncompatibleObservation { .. }
                | Error::Optimizer(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
