use std::io;

use thiserror::Error;

/// Errors produced anywhere in the quantization and GEMM pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("format error: {0}")]
    Format(String),

    #[error("length error: expected {expected} bytes, found {actual}")]
    Length { expected: u64, actual: u64 },

    #[error("value error: {0}")]
    Value(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error(
        "accumulator overflow at output ({row}, {col}): value {value} leaves the 32-bit window"
    )]
    Overflow { row: usize, col: usize, value: i64 },

    #[error("scale overflow: {scale} x {amplifier} does not fit a signed 32-bit integer")]
    ScaleOverflow { scale: f32, amplifier: u64 },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad inputs or configuration, as opposed to
    /// I/O failures or accumulator overflow.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Format(_)
                | Error::Length { .. }
                | Error::Value(_)
                | Error::Parameter(_)
                | Error::Dimension(_)
                | Error::ScaleOverflow { .. }
                | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
