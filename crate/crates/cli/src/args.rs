use std::path::PathBuf;

use clap::builder::PossibleValuesParser;
use clap::{ArgGroup, Args, Parser, Subcommand};
use stse_report::ReportFormat;

#[derive(Debug, Parser)]
#[command(name = "stse", version, about = "Statistical evaluation of trading strategies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a track record. Exit code: 0 perhaps skillful, 10 longer track
    /// record required, 20 probably bad.
    Evaluate(EvaluateArgs),
    /// Run one strategy over one price series and write its result files.
    Backtest(BacktestArgs),
    /// Run every strategy over every asset of a run configuration.
    Sweep(SweepArgs),
    /// Minimum track record length for an observed Sharpe ratio.
    Mintrack(MintrackArgs),
    /// Minimum backtest length, in years, for N independent trials.
    Minbtl(MinbtlArgs),
    /// Re-emit a CSV report in another format.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("input").required(true).multiple(false)))]
pub struct EvaluateArgs {
    /// CSV with header `date,return`.
    #[arg(long, group = "input")]
    pub returns: Option<PathBuf>,
    /// CSV with header `date,equity`, marked to market.
    #[arg(long, group = "input")]
    pub equity: Option<PathBuf>,
    /// Run configuration (evaluation settings, checklist answers).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "markdown")]
    pub format: ReportFormat,
}

pub const STRATEGY_NAMES: [&str; 9] = [
    "macd",
    "mama",
    "maps",
    "maps2",
    "random",
    "ma_crossover",
    "ma_parabolic_sar",
    "ma_parabolic_sar_sized",
    "random_trader",
];

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("prices_source").required(true).multiple(false)))]
pub struct BacktestArgs {
    #[arg(long, value_parser = PossibleValuesParser::new(STRATEGY_NAMES))]
    pub strategy: String,
    /// TOML file with strategy parameters (unlisted ones keep their defaults).
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// OHLC CSV with header `date,open,high,low,close,volume`.
    #[arg(long, group = "prices_source")]
    pub prices: Option<PathBuf>,
    /// Geometric Brownian motion prices, e.g.
    /// `n_bars=756,drift=0,volatility=0.01,start_price=100,tick_size=0.01`.
    #[arg(long, group = "prices_source")]
    pub synthetic: Option<String>,
    /// Seeds the synthetic prices and the random trader.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub symbol: Option<String>,
    /// Point size for CSV prices.
    #[arg(long, default_value_t = 0.01)]
    pub tick_size: f64,
    /// Run configuration supplying backtest, evaluation and checklist settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "markdown")]
    pub format: ReportFormat,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the configured output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the configured report format.
    #[arg(long)]
    pub format: Option<ReportFormat>,
}

#[derive(Debug, Args)]
pub struct MintrackArgs {
    /// Observed per-period Sharpe ratio.
    #[arg(long, allow_hyphen_values = true)]
    pub sr: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub threshold: f64,
    /// Confidence level.
    #[arg(long, default_value_t = 0.95)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub skew: f64,
    /// Raw kurtosis (3 for a Normal).
    #[arg(long, default_value_t = 3.0)]
    pub kurt: f64,
    #[arg(long, default_value_t = 252.0)]
    pub periodicity: f64,
    /// Smallest acceptable track record, in observations.
    #[arg(long, default_value_t = 30)]
    pub floor: u64,
}

#[derive(Debug, Args)]
pub struct MinbtlArgs {
    #[arg(long)]
    pub trials: u64,
    /// Expected maximum Sharpe ratio among the trials; approximated when absent.
    #[arg(long)]
    pub emax: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Report in CSV form.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "markdown")]
    pub format: ReportFormat,
}
