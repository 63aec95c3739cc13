use qlstm_forecast::ForecastError;

/// Every failure a command can report. All map to exit code 1; usage errors
/// never get this far (clap exits with 2).
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Forecast(#[from] ForecastError),
    #[error("incompatible model file: {0}")]
    Compatibility(String),
    #[error("{0}")]
    Runtime(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;
