//! Reference strategies and the interface the engine drives.
//!
//! A strategy sees each bar once, at its close, together with the current
//! position. Whatever it decides is executed by the engine at the next bar's
//! open, so nothing here can peek at future prices.

mod ma;
mod macd;
mod random;

use serde::{Deserialize, Serialize};

use crate::bar::Bar;
use crate::error::BacktestError;

pub use ma::{MaCrossover, MaCrossoverParams, MaParabolicSar, MaParabolicSarParams, MaParabolicSarSizedParams};
pub use macd::{Macd, MacdParams};
pub use random::{RandomTrader, RandomTraderParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Long,
    Short,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Long => 1.0,
            Side::Short => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Long => "long",
            Side::Short => "short",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Intent {
    Hold,
    /// Close any open position.
    Flat,
    /// Be in this position; reverses an opposite one, keeps a matching one.
    Enter(Side),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub intent: Intent,
    /// Distances in points (multiples of the series tick size) from the fill.
    pub stop_loss_points: Option<f64>,
    pub take_profit_points: Option<f64>,
    /// Absolute stop level for the open position; the engine only lets it tighten.
    pub trailing_stop: Option<f64>,
    /// Overrides the configured sizing: margin as a fraction of equity, so the
    /// notional is `fraction * equity * leverage`.
    pub margin_fraction: Option<f64>,
}

impl Decision {
    pub fn hold() -> Self {
        Self::with_intent(Intent::Hold)
    }

    pub fn flat() -> Self {
        Self::with_intent(Intent::Flat)
    }

    pub fn enter(side: Side) -> Self {
        Self::with_intent(Intent::Enter(side))
    }

    fn with_intent(intent: Intent) -> Self {
        Self { intent, stop_loss_points: None, take_profit_points: None, trailing_stop: None, margin_fraction: None }
    }

    pub fn trailing(mut self, stop: Option<f64>) -> Self {
        self.trailing_stop = stop;
        self
    }
}

/// What a strategy may observe when a bar closes.
#[derive(Debug, Clone, Copy)]
pub struct MarketView<'a> {
    pub index: usize,
    pub bar: &'a Bar,
    pub position: Option<Side>,
    /// Closed trades in a row that lost money on price (before costs).
    pub consecutive_losses: u32,
}

pub trait Strategy: Send {
    /// Bars that must close before the first decision can be acted on.
    fn warmup(&self) -> usize;

    fn on_bar(&mut self, view: &MarketView<'_>) -> Decision;
}

/// Price fed into a moving average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AppliedPrice {
    #[default]
    Close,
    Open,
}

impl AppliedPrice {
    pub fn of(self, bar: &Bar) -> f64 {
        match self {
            AppliedPrice::Close => bar.close,
            AppliedPrice::Open => bar.open,
        }
    }
}

/// Serializable strategy selection with parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum StrategySpec {
    Macd(#[serde(default)] MacdParams),
    #[serde(alias = "ma_crossover")]
    Mama(#[serde(default)] MaCrossoverParams),
    #[serde(alias = "ma_parabolic_sar")]
    Maps(#[serde(default)] MaParabolicSarParams),
    #[serde(alias = "ma_parabolic_sar_sized")]
    Maps2(#[serde(default)] MaParabolicSarSizedParams),
    #[serde(alias = "random_trader")]
    Random(#[serde(default)] RandomTraderParams),
}

impl StrategySpec {
    pub const NAMES: [&'static str; 5] = ["macd", "mama", "maps", "maps2", "random"];

    /// Default parameters for a strategy name (short or long form).
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "macd" => Self::Macd(MacdParams::default()),
            "mama" | "ma_crossover" => Self::Mama(MaCrossoverParams::default()),
            "maps" | "ma_parabolic_sar" => Self::Maps(MaParabolicSarParams::default()),
            "maps2" | "ma_parabolic_sar_sized" => Self::Maps2(MaParabolicSarSizedParams::default()),
            "random" | "random_trader" => Self::Random(RandomTraderParams::default()),
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Macd(_) => "macd",
            Self::Mama(_) => "mama",
            Self::Maps(_) => "maps",
            Self::Maps2(_) => "maps2",
            Self::Random(_) => "random",
        }
    }

    /// Column label used in reports.
    pub fn display_name(&self) -> &'static str {
        match self {
            Self::Macd(_) => "MACD",
            Self::Mama(_) => "MAMA",
            Self::Maps(_) => "MAPS",
            Self::Maps2(_) => "MAPS2",
            Self::Random(_) => "RANDOM",
        }
    }

    pub fn validate(&self) -> Result<(), BacktestError> {
        match self {
            Self::Macd(p) => p.validate(),
            Self::Mama(p) => p.validate(),
            Self::Maps(p) => p.validate(),
            Self::Maps2(p) => p.validate(),
            Self::Random(p) => p.validate(),
        }
    }

    pub fn build(&self) -> Result<Box<dyn Strategy>, BacktestError> {
        self.validate()?;
        Ok(match self {
            Self::Macd(p) => Box::new(Macd::new(p)),
            Self::Mama(p) => Box::new(MaCrossover::new(p)),
            Self::Maps(p) => Box::new(MaParabolicSar::new(p)),
            Self::Maps2(p) => Box::new(MaParabolicSar::sized(p)),
            Self::Random(p) => Box::new(RandomTrader::new(p)),
        })
    }

    /// Replaces the random trader's seed; other strategies are deterministic.
    pub fn with_seed(mut self, seed: u64) -> Self {
        if let Self::Random(p) = &mut self {
            p.seed = seed;
        }
        self
    }
}

pub(crate) fn check_period(name: &str, value: usize) -> Result<(), BacktestError> {
    if value == 0 {
        return Err(BacktestError::InvalidStrategyParams(format!("{name} must be at least 1")));
    }
    Ok(())
}

pub(crate) fn check_sar(step: f64, max: f64) -> Result<(), BacktestError> {
    if !(step > 0.0 && step <= max && max.is_finite()) {
        return Err(BacktestError::InvalidStrategyParams(format!(
            "SAR needs 0 < step <= maximum, got step {step}, maximum {max}"
        )));
    }
    Ok(())
}

pub(crate) fn check_points(name: &str, value: f64) -> Result<(), BacktestError> {
    if !(value.is_finite() && value >= 0.0) {
        return Err(BacktestError::InvalidStrategyParams(format!("{name} must be nonnegative")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for name in StrategySpec::NAMES {
            let spec = StrategySpec::from_name(name).unwrap();
            assert_eq!(spec.name(), name);
            assert!(spec.build().is_ok());
        }
        assert!(StrategySpec::from_name("rfor").is_none());
        assert_eq!(StrategySpec::from_name("ma_parabolic_sar_sized").unwrap().name(), "maps2");
    }

    #[test]
    fn invalid_params_rejected() {
        let bad = StrategySpec::Macd(MacdParams { fast_period: 0, ..Default::default() });
        assert!(matches!(bad.build(), Err(BacktestError::InvalidStrategyParams(_))));
        let bad = StrategySpec::Maps(MaParabolicSarParams { sar_step: 0.3, sar_maximum: 0.2, ..Default::default() });
        assert!(bad.build().is_err());
        let bad = StrategySpec::Random(RandomTraderParams { holding_period: 0, ..Default::default() });
        assert!(bad.build().is_err());
    }
}
