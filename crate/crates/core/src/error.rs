use std::path::PathBuf;

/// Errors raised by the simulator layers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("value {value} out of range 0..={max}")]
    OutOfRange { value: usize, max: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("truncation leakage {leakage:e} exceeds bound {bound:e}")]
    Truncation { leakage: f64, bound: f64 },

    #[error("window violation: content at bin {bin} would leave its window")]
    WindowViolation { bin: isize },

    #[error("intensity {value} outside bounds [{min}, {max}]")]
    IntensityRange { value: f64, min: f64, max: f64 },

    #[error("cannot rescale an empty train: phase is undefined")]
    UndefinedPhase,

    #[error("framing error: expected {expected} bits, got {got}")]
    Framing { expected: usize, got: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("insufficient material: need {needed} bits, have {available}")]
    InsufficientMaterial { needed: usize, available: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
