//! File formats around the evaluator: strict CSV ingestion, the TOML run
//! configuration and report emission (CSV, Markdown, JSON).

pub mod config;
pub mod error;
pub mod parse;
pub mod report;

pub use config::{AssetSpec, OutputSpec, RunConfig};
pub use error::ReportError;
pub use parse::{parse_equity_csv, parse_ohlc_csv, parse_returns_csv, read_equity, read_ohlc, read_returns};
pub use report::{emit_report, parse_report_csv, ReportFormat, ReportRow, ThresholdCell};
