//! Deterministic single-asset backtests on daily bars.
//!
//! Prices come from seeded generators ([`gbm_prices`], [`bootstrap_prices`])
//! or from ingested files. [`run_backtest`] drives one of the reference
//! strategies over them and returns an equity curve, a trade log and the
//! return series the evaluator consumes.

pub mod audit;
pub mod bar;
pub mod engine;
pub mod error;
pub mod indicators;
pub mod strategy;
pub mod synthetic;

pub use bar::{Bar, PriceSeries};
pub use engine::{
    run_backtest, run_strategy, BacktestConfig, BacktestResult, ExitReason, PositionSizing, Trade, TransactionCost,
};
pub use error::BacktestError;
pub use strategy::{Decision, Intent, MarketView, Side, Strategy, StrategySpec};
pub use synthetic::{bootstrap_prices, gbm_prices, GbmSpec};
