use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The state norm crossed the overflow guard. Treated as evidence against
    /// forward completeness on the simulated horizon.
    #[error("state norm exceeded {guard:e} at t = {time}")]
    BlowUp { time: f64, guard: f64 },

    #[error("right-hand side is not finite at t = {time}")]
    NonFinite { time: f64 },

    #[error("step size underflow at t = {time}")]
    StepUnderflow { time: f64 },

    #[error("unknown system `{0}`")]
    UnknownSystem(String),

    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
