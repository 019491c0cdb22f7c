//! Error type shared by every module of the engine.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Error {
    #[error("alpha must lie strictly between 0 and 1, got {alpha}")]
    AlphaOutOfRange { alpha: f64 },

    #[error("at least {min} resamples are required, got {requested}")]
    PermCountTooLow { requested: usize, min: usize },

    #[error("{what} needs at least {min} observations, got {got}")]
    DimensionTooSmall {
        what: Cow<'static, str>,
        min: usize,
        got: usize,
    },

    #[error("zero variance in {context}")]
    ZeroVariance { context: String },

    #[error("sigma must be positive, got {sigma}")]
    SigmaNonPositive { sigma: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("unbalanced design: {0}")]
    Unbalanced(String),

    #[error("{family} supports only the {supported} tail")]
    TailUnsupported {
        family: Cow<'static, str>,
        supported: Cow<'static, str>,
    },

    #[error("no standard error is defined for the {family} family")]
    SeUnavailable { family: Cow<'static, str> },

    #[error("bias correction needs n >= 3, got {n}")]
    SampleTooSmall { n: usize },

    #[error("{count} rearrangements exceed the enumeration limit of {limit}")]
    TooLargeToEnumerate { count: String, limit: u64 },

    #[error("argument outside the function domain: {0}")]
    DomainError(String),

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("bootstrap gave up after {attempts} attempts: too many degenerate resamples")]
    DegenerateBootstrap { attempts: usize },

    #[error("parse error at row {row}, column {col}: {message}")]
    ParseError {
        row: usize,
        col: usize,
        message: String,
    },

    #[error("non-finite value {value:?} at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize, value: String },

    #[error("table {0} contains no data")]
    EmptyTable(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn zero_variance(context: impl Into<String>) -> Self {
        Error::ZeroVariance {
            context: context.into(),
        }
    }

    /// True for errors caused by the input data rather than by the
    /// requested configuration.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::ZeroVariance { .. }
                | Error::ShapeMismatch(_)
                | Error::Unbalanced(_)
                | Error::DimensionTooSmall { .. }
                | Error::SampleTooSmall { .. }
                | Error::DegenerateBootstrap { .. }
                | Error::ParseError { .. }
                | Error::NonFiniteValue { .. }
                | Error::EmptyTable(_)
                | Error::Io(_)
                | Error::TooLargeToEnumerate { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
