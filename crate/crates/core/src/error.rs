use thiserror::Error;

pub type Result<T> = std::result::Result<T, ForecastError>;

/// Errors raised anywhere in the forecasting pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ForecastError {
    #[error("capacity error: {0}")]
    Capacity(String),
    #[error("index error: {0}")]
    Index(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("state error: {0}")]
    State(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("io error: {0}")]
    Io(String),
}

impl ForecastError {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        ForecastError::Shape(msg.into())
    }
}

impl From<std::io::Error> for ForecastError {
    fn from(err: std::io::Error) -> Self {
        ForecastError::Io(err.to_string())
    }
}

/// Rejects NaN and infinities in `values`, naming `what` in the error.
pub(crate) fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(ForecastError::Numeric(format!(
            "{what}: non-finite value {} at position {i}",
            values[i]
        ))),
        None => Ok(()),
    }
}
