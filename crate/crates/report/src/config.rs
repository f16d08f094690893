//! TOML run configuration for evaluations and strategy × asset sweeps.
//! Dates are quoted ISO-8601 strings (`start = "2019-01-01"`).
//!
//! ```toml
//! periodicity = 252
//!
//! [evaluation]
//! sr_thresholds = [0.0, 0.1]
//! confidence = 0.95
//!
//! [checklist]
//! transaction_costs_included = { answer = "yes" }
//!
//! [backtest]
//! initial_deposit = 100000
//!
//! [[strategies]]
//! strategy = "macd"
//!
//! [[assets]]
//! symbol = "EURUSD"
//! synthetic = { seed = 1, n_bars = 756, drift = 0.0, volatility = 0.006, start_price = 1.1, tick_size = 0.00001 }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stse_backtest::{gbm_prices, BacktestConfig, GbmSpec, PriceSeries, StrategySpec};
use stse_core::{ConditionsChecklist, EvaluationConfig};

use crate::error::ReportError;
use crate::parse::parse_ohlc_csv;
use crate::report::ReportFormat;

fn default_periodicity() -> f64 {
    252.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Observations per year for every series in the run.
    #[serde(default = "default_periodicity")]
    pub periodicity: f64,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
    #[serde(default)]
    pub checklist: ConditionsChecklist,
    #[serde(default)]
    pub backtest: BacktestConfig,
    #[serde(default)]
    pub strategies: Vec<StrategySpec>,
    #[serde(default)]
    pub assets: Vec<AssetSpec>,
    /// Expected maximum Sharpe ratio across the sweep's trials; approximated when absent.
    #[serde(default)]
    pub expected_max_sharpe: Option<f64>,
    #[serde(default)]
    pub output: OutputSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            periodicity: default_periodicity(),
            evaluation: EvaluationConfig::default(),
            checklist: ConditionsChecklist::default(),
            backtest: BacktestConfig::default(),
            strategies: Vec::new(),
            assets: Vec::new(),
            expected_max_sharpe: None,
            output: OutputSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Where sweep artifacts go; relative paths resolve against the config file.
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub format: ReportFormat,
}

/// One instrument: either synthetic (`synthetic = {...}`) or an OHLC file (`csv = "..."`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetSpec {
    pub symbol: String,
    #[serde(default)]
    pub synthetic: Option<GbmSpec>,
    #[serde(default)]
    pub csv: Option<PathBuf>,
    /// Point size for CSV assets; synthetic assets carry their own.
    #[serde(default)]
    pub tick_size: Option<f64>,
}

impl AssetSpec {
    pub fn load(&self, base_dir: &Path) -> Result<PriceSeries, ReportError> {
        match (&self.synthetic, &self.csv) {
            (Some(spec), None) => {
                gbm_prices(spec, &self.symbol).map_err(|e| ReportError::Config(format!("asset {}: {e}", self.symbol)))
            }
            (None, Some(path)) => {
                let tick = self.tick_size.unwrap_or(0.01);
                parse_ohlc_csv(base_dir.join(path), &self.symbol, tick)
            }
            _ => Err(ReportError::Config(format!(
                "asset {} needs exactly one of `synthetic` or `csv`",
                self.symbol
            ))),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ReportError> {
        let mut config: RunConfig = toml::from_str(text).map_err(|e| ReportError::Config(e.to_string()))?;
        config.backtest.periodicity = config.periodicity;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ReportError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ReportError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), ReportError> {
        let bad = |m: String| Err(ReportError::Config(m));
        if !(self.periodicity.is_finite() && self.periodicity > 0.0) {
            return bad("periodicity must be positive".into());
        }
        if let Err(e) = self.evaluation.validate() {
            return bad(e.to_string());
        }
        if let Err(e) = self.backtest.validate() {
            return bad(e.to_string());
        }
        for s in &self.strategies {
            if let Err(e) = s.validate() {
                return bad(format!("strategy {}: {e}", s.name()));
            }
        }
        let mut symbols: Vec<&str> = self.assets.iter().map(|a| a.symbol.as_str()).collect();
        symbols.sort_unstable();
        if symbols.windows(2).any(|w| w[0] == w[1]) {
            return bad("asset symbols must be unique".into());
        }
        if let Some(e) = self.expected_max_sharpe {
            if !(e.is_finite() && e > 0.0) {
                return bad("expected_max_sharpe must be positive".into());
            }
        }
        Ok(())
    }
}
