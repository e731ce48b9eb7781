use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("event stream is empty")]
    EmptyStream,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("density has no mass")]
    EmptyDensity,

    #[error("bin widths differ: {left} vs {right}")]
    GridMismatch { left: f64, right: f64 },

    #[error("estimates share no usable bins")]
    InsufficientOverlap,

    #[error("smoothed baseline is zero at bin {bin} while the density is not")]
    DegenerateBin { bin: usize },

    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;
