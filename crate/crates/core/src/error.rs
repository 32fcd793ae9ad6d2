use std::io;

use thiserror::Error;

/// Which axis of a pixel coordinate was out of range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Axis::X => f.write_str("x"),
            Axis::Y => f.write_str("y"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{axis} coordinate {value} out of bounds (limit {limit})")]
    Coordinate { axis: Axis, value: u64, limit: u32 },

    #[error("invalid dimensions: {0}")]
    Dimensions(String),

    #[error("calibration error: {0}")]
    Calibration(String),

    #[error("line {line}: parse error: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: invalid record: {message}")]
    Record { line: usize, message: String },

    #[error("candidate {index}: {message}")]
    Validation { index: usize, message: String },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("{metric} is undefined: {reason}")]
    UndefinedMetric {
        metric: &'static str,
        reason: &'static str,
    },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("unsupported image format: {0}")]
    Format(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("scene spec error: {0}")]
    Scene(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
