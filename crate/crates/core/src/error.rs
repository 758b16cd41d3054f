use thiserror::Error;

use crate::ensemble::Phase;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("index ({row}, {col}) out of range for {n}x{n} matrix")]
    IndexOutOfRange { row: usize, col: usize, n: usize },

    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("matrix is not symmetric positive definite: pivot {value:e} at index {index}")]
    NotSpd { index: usize, value: f64 },

    #[error("coefficient is not positive: {value} at ({x}, {y}), t = {t}")]
    NonPositiveCoefficient { value: f64, x: f64, y: f64, t: f64 },

    #[error("mesh has no interface edges")]
    EmptyInterface,

    #[error("unsupported coefficient family: {0}")]
    UnsupportedFamily(String),

    #[error("invalid sample specification: {0}")]
    InvalidSamples(String),

    #[error("step {step} failed during {phase}: {source}")]
    StepFailed {
        step: usize,
        phase: Phase,
        #[source]
        source: Box<Error>,
    },

    #[error("solver residual {residual:e} exceeds tolerance {tolerance:e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors that come from the numerics rather than from the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotSpd { .. } | Error::StepFailed { .. } | Error::ResidualTooLarge { .. }
        )
    }
}
