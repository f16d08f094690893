use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::BacktestError;

/// One OHLCV bar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub timestamp: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: f64,
}

impl Bar {
    pub fn validate(&self) -> Result<(), String> {
        let prices = [self.open, self.high, self.low, self.close];
        if prices.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return Err("prices must be positive and finite".into());
        }
        if !(self.volume.is_finite() && self.volume >= 0.0) {
            return Err("volume must be nonnegative".into());
        }
        let body_low = self.open.min(self.close);
        let body_high = self.open.max(self.close);
        if !(self.low <= body_low && body_high <= self.high) {
            return Err("low <= min(open, close) <= max(open, close) <= high violated".into());
        }
        Ok(())
    }
}

/// Bars of one instrument, strictly increasing in time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    bars: Vec<Bar>,
    symbol: String,
    /// One "point": the unit for stop-loss and take-profit distances.
    tick_size: f64,
}

impl PriceSeries {
    pub fn new(bars: Vec<Bar>, symbol: impl Into<String>, tick_size: f64) -> Result<Self, BacktestError> {
        if !(tick_size.is_finite() && tick_size > 0.0) {
            return Err(BacktestError::InvalidParams(format!("tick_size must be positive, got {tick_size}")));
        }
        for (index, bar) in bars.iter().enumerate() {
            bar.validate().map_err(|reason| BacktestError::InvalidBar { index, reason })?;
            if index > 0 && bar.timestamp <= bars[index - 1].timestamp {
                return Err(BacktestError::InvalidBar {
                    index,
                    reason: "timestamps must be strictly increasing".into(),
                });
            }
        }
        Ok(Self { bars, symbol: symbol.into(), tick_size })
    }

    pub fn bars(&self) -> &[Bar] {
        &self.bars
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn tick_size(&self) -> f64 {
        self.tick_size
    }

    /// The first `len` bars.
    pub fn prefix(&self, len: usize) -> Self {
        Self {
            bars: self.bars[..len.min(self.bars.len())].to_vec(),
            symbol: self.symbol.clone(),
            tick_size: self.tick_size,
        }
    }

    pub fn closes(&self) -> impl Iterator<Item = f64> + '_ {
        self.bars.iter().map(|b| b.close)
    }
}
