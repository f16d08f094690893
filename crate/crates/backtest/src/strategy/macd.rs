use serde::{Deserialize, Serialize};

use super::{check_period, check_points, Decision, MarketView, Side, Strategy};
use crate::error::BacktestError;
use crate::indicators::Ema;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MacdParams {
    pub fast_period: usize,
    pub slow_period: usize,
    pub signal_period: usize,
    pub take_profit_points: f64,
    pub stop_loss_points: f64,
}

impl Default for MacdParams {
    fn default() -> Self {
        Self { fast_period: 12, slow_period: 24, signal_period: 9, take_profit_points: 50.0, stop_loss_points: 20.0 }
    }
}

impl MacdParams {
    pub fn validate(&self) -> Result<(), BacktestError> {
        check_period("fast_period", self.fast_period)?;
        check_period("slow_period", self.slow_period)?;
        check_period("signal_period", self.signal_period)?;
        check_points("take_profit_points", self.take_profit_points)?;
        check_points("stop_loss_points", self.stop_loss_points)
    }
}

/// MACD line against its signal line. Enters on crossings; on the first bar
/// with a defined signal it enters on the side of the current sign.
pub struct Macd {
    params: MacdParams,
    fast: Ema,
    slow: Ema,
    signal: Ema,
    prev_histogram: Option<f64>,
}

impl Macd {
    pub fn new(params: &MacdParams) -> Self {
        Self {
            params: params.clone(),
            fast: Ema::new(params.fast_period),
            slow: Ema::new(params.slow_period),
            signal: Ema::new(params.signal_period),
            prev_histogram: None,
        }
    }

    fn entry(&self, side: Side) -> Decision {
        let mut d = Decision::enter(side);
        // zero means "no stop" / "no target"
        d.stop_loss_points = (self.params.stop_loss_points > 0.0).then_some(self.params.stop_loss_points);
        d.take_profit_points = (self.params.take_profit_points > 0.0).then_some(self.params.take_profit_points);
        d
    }
}

impl Strategy for Macd {
    fn warmup(&self) -> usize {
        self.params.fast_period.max(self.params.slow_period) + self.params.signal_period - 1
    }

    fn on_bar(&mut self, view: &MarketView<'_>) -> Decision {
        let fast = self.fast.update(view.bar.close);
        let slow = self.slow.update(view.bar.close);
        let (Some(fast), Some(slow)) = (fast, slow) else {
            return Decision::hold();
        };
        let line = fast - slow;
        let Some(signal) = self.signal.update(line) else {
            return Decision::hold();
        };
        let histogram = line - signal;
        let prev = self.prev_histogram.replace(histogram);
        let side = match prev {
            None if histogram > 0.0 => Some(Side::Long),
            None if histogram < 0.0 => Some(Side::Short),
            Some(p) if p <= 0.0 && histogram > 0.0 => Some(Side::Long),
            Some(p) if p >= 0.0 && histogram < 0.0 => Some(Side::Short),
            _ => None,
        };
        match side {
            Some(s) if view.position != Some(s) => self.entry(s),
            _ => Decision::hold(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bar::Bar;
    use crate::strategy::Intent;
    use chrono::{Days, NaiveDate};

    fn ramp(n: usize) -> Vec<Bar> {
        let d0 = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        (0..n)
            .map(|i| {
                let c = 100.0 * 1.01f64.powi(i as i32);
                let o = c / 1.01;
                Bar { timestamp: d0 + Days::new(i as u64), open: o, high: c, low: o, close: c, volume: 0.0 }
            })
            .collect()
    }

    #[test]
    fn first_signal_on_ramp_is_long() {
        // On a linear ramp the MACD line is constant and the histogram is exactly
        // zero, so use a geometric ramp: the line keeps growing and the signal
        // EMA trails it.
        let mut m = Macd::new(&MacdParams::default());
        assert_eq!(m.warmup(), 32);
        let bars = ramp(40);
        let mut first = None;
        for (i, bar) in bars.iter().enumerate() {
            let d = m.on_bar(&MarketView { index: i, bar, position: None, consecutive_losses: 0 });
            if d.intent != Intent::Hold && first.is_none() {
                first = Some((i, d));
            }
        }
        let (i, d) = first.expect("MACD should enter on a 40-bar ramp");
        assert_eq!(i + 1, m.warmup());
        assert_eq!(d.intent, Intent::Enter(Side::Long));
        assert_eq!(d.stop_loss_points, Some(20.0));
        assert_eq!(d.take_profit_points, Some(50.0));
    }

    #[test]
    fn no_duplicate_entry_when_already_long() {
        let mut m = Macd::new(&MacdParams::default());
        for (i, bar) in ramp(40).iter().enumerate() {
            let d = m.on_bar(&MarketView { index: i, bar, position: Some(Side::Long), consecutive_losses: 0 });
            assert_eq!(d.intent, Intent::Hold);
        }
    }
}
