use stse_core::SeriesError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BacktestError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid strategy parameters: {0}")]
    InvalidStrategyParams(String),
    #[error("bar {index}: {reason}")]
    InvalidBar { index: usize, reason: String },
    #[error("bootstrap source has no returns")]
    EmptySource,
    #[error("strategy needs {warmup} bars of warm-up but the series has {bars}")]
    WarmupTooLong { warmup: usize, bars: usize },
    #[error("account equity {equity} at bar {index} is not positive")]
    InsolventAccount { index: usize, equity: f64 },
    #[error(transparent)]
    Series(#[from] SeriesError),
}
