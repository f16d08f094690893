use serde::{Deserialize, Serialize};

use super::{check_period, check_sar, AppliedPrice, Decision, MarketView, Side, Strategy};
use crate::bar::Bar;
use crate::error::BacktestError;
use crate::indicators::{ParabolicSar, ShiftedSma};

/// Price against a shifted simple moving average, plus an optional
/// moving-average trailing stop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaCrossoverParams {
    pub ma_period: usize,
    pub ma_shift: usize,
    pub applied: AppliedPrice,
    /// `None` disables the trailing stop.
    pub trailing_ma_period: Option<usize>,
    pub trailing_ma_shift: usize,
    pub trailing_applied: AppliedPrice,
}

impl Default for MaCrossoverParams {
    fn default() -> Self {
        Self {
            ma_period: 12,
            ma_shift: 6,
            applied: AppliedPrice::Open,
            trailing_ma_period: Some(12),
            trailing_ma_shift: 0,
            trailing_applied: AppliedPrice::Open,
        }
    }
}

impl MaCrossoverParams {
    pub fn validate(&self) -> Result<(), BacktestError> {
        check_period("ma_period", self.ma_period)?;
        if let Some(p) = self.trailing_ma_period {
            check_period("trailing_ma_period", p)?;
        }
        Ok(())
    }
}

/// Always positioned on the side of the close relative to the average:
/// long above, short below, unchanged when equal.
pub struct MaCrossover {
    applied: AppliedPrice,
    signal: ShiftedSma,
    trailing: Option<(ShiftedSma, AppliedPrice)>,
}

impl MaCrossover {
    pub fn new(p: &MaCrossoverParams) -> Self {
        Self {
            applied: p.applied,
            signal: ShiftedSma::new(p.ma_period, p.ma_shift),
            trailing: p.trailing_ma_period.map(|period| (ShiftedSma::new(period, p.trailing_ma_shift), p.trailing_applied)),
        }
    }
}

impl Strategy for MaCrossover {
    fn warmup(&self) -> usize {
        self.signal.warmup()
    }

    fn on_bar(&mut self, view: &MarketView<'_>) -> Decision {
        let bar = view.bar;
        let stop = self.trailing.as_mut().and_then(|(sma, applied)| sma.update(applied.of(bar)));
        let Some(ma) = self.signal.update(self.applied.of(bar)) else {
            return Decision::hold();
        };
        let decision = if bar.close > ma {
            Decision::enter(Side::Long)
        } else if bar.close < ma {
            Decision::enter(Side::Short)
        } else {
            Decision::hold()
        };
        decision.trailing(stop)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaParabolicSarParams {
    pub ma_period: usize,
    pub ma_shift: usize,
    pub applied: AppliedPrice,
    pub sar_step: f64,
    pub sar_maximum: f64,
}

impl Default for MaParabolicSarParams {
    fn default() -> Self {
        Self {
            ma_period: 12,
            ma_shift: 6,
            applied: AppliedPrice::Close,
            sar_step: ParabolicSar::DEFAULT_STEP,
            sar_maximum: ParabolicSar::DEFAULT_MAX,
        }
    }
}

impl MaParabolicSarParams {
    pub fn validate(&self) -> Result<(), BacktestError> {
        check_period("ma_period", self.ma_period)?;
        check_sar(self.sar_step, self.sar_maximum)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaParabolicSarSizedParams {
    pub ma_period: usize,
    pub ma_shift: usize,
    pub applied: AppliedPrice,
    pub sar_step: f64,
    pub sar_maximum: f64,
    /// Margin committed per trade, percent of equity.
    pub percent: f64,
    /// After more than one consecutive loss the size shrinks by `losses / decrease_factor`.
    pub decrease_factor: f64,
}

impl Default for MaParabolicSarSizedParams {
    fn default() -> Self {
        Self {
            ma_period: 15,
            ma_shift: 4,
            applied: AppliedPrice::Open,
            sar_step: ParabolicSar::DEFAULT_STEP,
            sar_maximum: ParabolicSar::DEFAULT_MAX,
            percent: 10.0,
            decrease_factor: 3.0,
        }
    }
}

impl MaParabolicSarSizedParams {
    pub fn validate(&self) -> Result<(), BacktestError> {
        check_period("ma_period", self.ma_period)?;
        check_sar(self.sar_step, self.sar_maximum)?;
        if !(self.percent > 0.0 && self.percent <= 100.0) {
            return Err(BacktestError::InvalidStrategyParams("percent must be in (0, 100]".into()));
        }
        if !(self.decrease_factor > 0.0 && self.decrease_factor.is_finite()) {
            return Err(BacktestError::InvalidStrategyParams("decrease_factor must be positive".into()));
        }
        Ok(())
    }
}

/// Smallest size after repeated losses, as a fraction of the base size.
pub const MIN_SIZE_FRACTION: f64 = 0.1;

/// Enters when the close crosses the shifted average (the first defined bar
/// enters on the current side) and trails the position with a parabolic SAR.
pub struct MaParabolicSar {
    applied: AppliedPrice,
    signal: ShiftedSma,
    sar: ParabolicSar,
    regime: Option<Side>,
    sizing: Option<(f64, f64)>,
}

impl MaParabolicSar {
    pub fn new(p: &MaParabolicSarParams) -> Self {
        Self {
            applied: p.applied,
            signal: ShiftedSma::new(p.ma_period, p.ma_shift),
            sar: ParabolicSar::new(p.sar_step, p.sar_maximum),
            regime: None,
            sizing: None,
        }
    }

    pub fn sized(p: &MaParabolicSarSizedParams) -> Self {
        Self {
            applied: p.applied,
            signal: ShiftedSma::new(p.ma_period, p.ma_shift),
            sar: ParabolicSar::new(p.sar_step, p.sar_maximum),
            regime: None,
            sizing: Some((p.percent / 100.0, p.decrease_factor)),
        }
    }

    fn margin_fraction(&self, losses: u32) -> Option<f64> {
        let (base, decrease) = self.sizing?;
        if losses <= 1 {
            return Some(base);
        }
        let scaled = base * (1.0 - f64::from(losses) / decrease);
        Some(scaled.max(base * MIN_SIZE_FRACTION))
    }

    fn regime_of(bar: &Bar, ma: f64) -> Option<Side> {
        if bar.close > ma {
            Some(Side::Long)
        } else if bar.close < ma {
            Some(Side::Short)
        } else {
            None
        }
    }
}

impl Strategy for MaParabolicSar {
    fn warmup(&self) -> usize {
        self.signal.warmup().max(2)
    }

    fn on_bar(&mut self, view: &MarketView<'_>) -> Decision {
        let stop = self.sar.update(view.bar);
        let Some(ma) = self.signal.update(self.applied.of(view.bar)) else {
            return Decision::hold().trailing(stop);
        };
        let Some(now) = Self::regime_of(view.bar, ma) else {
            return Decision::hold().trailing(stop);
        };
        let crossed = self.regime != Some(now);
        self.regime = Some(now);
        if !crossed || view.position == Some(now) {
            return Decision::hold().trailing(stop);
        }
        let mut d = Decision::enter(now).trailing(stop);
        d.margin_fraction = self.margin_fraction(view.consecutive_losses);
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategy::Intent;
    use chrono::{Days, NaiveDate};

    fn bars(closes: &[f64]) -> Vec<Bar> {
        let d0 = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let mut prev = closes[0];
        closes
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let b = Bar {
                    timestamp: d0 + Days::new(i as u64),
                    open: prev,
                    high: prev.max(c),
                    low: prev.min(c),
                    close: c,
                    volume: 0.0,
                };
                prev = c;
                b
            })
            .collect()
    }

    fn run(s: &mut dyn Strategy, bars: &[Bar]) -> Vec<Decision> {
        bars.iter()
            .enumerate()
            .map(|(i, bar)| s.on_bar(&MarketView { index: i, bar, position: None, consecutive_losses: 0 }))
            .collect()
    }

    #[test]
    fn crossover_is_silent_on_constant_prices() {
        let mut s = MaCrossover::new(&MaCrossoverParams::default());
        assert!(run(&mut s, &bars(&[50.0; 40])).iter().all(|d| d.intent == Intent::Hold));
    }

    #[test]
    fn crossover_follows_side_of_average() {
        let p = MaCrossoverParams { ma_period: 3, ma_shift: 0, applied: AppliedPrice::Close, ..Default::default() };
        let mut s = MaCrossover::new(&p);
        let d = run(&mut s, &bars(&[10.0, 10.0, 10.0, 13.0, 7.0]));
        assert_eq!(d[2].intent, Intent::Hold);
        assert_eq!(d[3].intent, Intent::Enter(Side::Long));
        assert_eq!(d[4].intent, Intent::Enter(Side::Short));
    }

    #[test]
    fn sar_strategy_enters_once_per_crossing() {
        let p = MaParabolicSarParams { ma_period: 2, ma_shift: 0, ..Default::default() };
        let mut s = MaParabolicSar::new(&p);
        let d = run(&mut s, &bars(&[10.0, 11.0, 12.0, 13.0, 10.0, 9.0]));
        let intents: Vec<_> = d.iter().map(|d| d.intent).collect();
        assert_eq!(
            intents,
            vec![
                Intent::Hold,
                Intent::Enter(Side::Long),
                Intent::Hold,
                Intent::Hold,
                Intent::Enter(Side::Short),
                Intent::Hold
            ]
        );
        assert!(d[1].trailing_stop.is_some());
        assert!(d[1].margin_fraction.is_none());
    }

    #[test]
    fn sized_variant_shrinks_after_losses() {
        let s = MaParabolicSar::sized(&MaParabolicSarSizedParams::default());
        assert_eq!(s.margin_fraction(0), Some(0.1));
        assert_eq!(s.margin_fraction(1), Some(0.1));
        assert!((s.margin_fraction(2).unwrap() - 0.1 / 3.0).abs() < 1e-15);
        assert!((s.margin_fraction(5).unwrap() - 0.01).abs() < 1e-15);
    }
}
