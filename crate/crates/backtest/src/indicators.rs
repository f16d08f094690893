//! Streaming indicators. Each `update` consumes one bar and returns the value
//! as of that bar's close, or `None` while the indicator is warming up.

use std::collections::VecDeque;

use crate::bar::Bar;

/// Exponential moving average with `alpha = 2 / (period + 1)`, seeded with
/// the simple mean of the first `period` inputs.
#[derive(Debug, Clone)]
pub struct Ema {
    period: usize,
    alpha: f64,
    seed_sum: f64,
    count: usize,
    value: Option<f64>,
}

impl Ema {
    pub fn new(period: usize) -> Self {
        assert!(period > 0, "EMA period must be positive");
        Self { period, alpha: 2.0 / (period as f64 + 1.0), seed_sum: 0.0, count: 0, value: None }
    }

    pub fn update(&mut self, x: f64) -> Option<f64> {
        self.count += 1;
        self.value = match self.value {
            Some(prev) => Some(prev + self.alpha * (x - prev)),
            None => {
                self.seed_sum += x;
                (self.count == self.period).then(|| self.seed_sum / self.period as f64)
            }
        };
        self.value
    }

    pub fn value(&self) -> Option<f64> {
        self.value
    }
}

/// Simple moving average whose output is delayed by `shift` bars: the value at
/// bar `t` is the mean of closes `t-shift-period+1 ..= t-shift`.
#[derive(Debug, Clone)]
pub struct ShiftedSma {
    period: usize,
    shift: usize,
    window: VecDeque<f64>,
    history: VecDeque<f64>,
}

impl ShiftedSma {
    pub fn new(period: usize, shift: usize) -> Self {
        assert!(period > 0, "SMA period must be positive");
        Self { period, shift, window: VecDeque::new(), history: VecDeque::new() }
    }

    /// Bars consumed before the first value appears.
    pub fn warmup(&self) -> usize {
        self.period + self.shift
    }

    pub fn update(&mut self, x: f64) -> Option<f64> {
        self.window.push_back(x);
        if self.window.len() > self.period {
            self.window.pop_front();
        }
        if self.window.len() < self.period {
            return None;
        }
        let mean = self.window.iter().sum::<f64>() / self.period as f64;
        self.history.push_back(mean);
        if self.history.len() > self.shift + 1 {
            self.history.pop_front();
        }
        (self.history.len() == self.shift + 1).then(|| self.history[0])
    }
}

/// Wilder's parabolic stop-and-reverse.
///
/// After the second bar the trend starts in the direction of the close change
/// (up on ties). `update` returns the stop level for the *next* bar.
#[derive(Debug, Clone)]
pub struct ParabolicSar {
    step: f64,
    max_step: f64,
    prev: Option<Bar>,
    state: Option<SarState>,
}

#[derive(Debug, Clone, Copy)]
struct SarState {
    uptrend: bool,
    extreme: f64,
    af: f64,
    next_sar: f64,
}

impl ParabolicSar {
    pub const DEFAULT_STEP: f64 = 0.02;
    pub const DEFAULT_MAX: f64 = 0.2;

    pub fn new(step: f64, max_step: f64) -> Self {
        assert!(step > 0.0 && max_step >= step, "invalid SAR steps");
        Self { step, max_step, prev: None, state: None }
    }

    pub fn is_uptrend(&self) -> Option<bool> {
        self.state.map(|s| s.uptrend)
    }

    pub fn update(&mut self, bar: &Bar) -> Option<f64> {
        let prev = self.prev.replace(*bar)?;
        let state = match self.state {
            None => {
                let uptrend = bar.close >= prev.close;
                let (sar, extreme) = if uptrend {
                    (prev.low.min(bar.low), prev.high.max(bar.high))
                } else {
                    (prev.high.max(bar.high), prev.low.min(bar.low))
                };
                self.advance(SarState { uptrend, extreme, af: self.step, next_sar: sar }, sar, bar, &prev)
            }
            Some(mut s) => {
                let reversed = if s.uptrend { bar.low < s.next_sar } else { bar.high > s.next_sar };
                let sar = if reversed {
                    let sar = s.extreme;
                    s.uptrend = !s.uptrend;
                    s.extreme = if s.uptrend { bar.high } else { bar.low };
                    s.af = self.step;
                    sar
                } else {
                    let new_extreme = if s.uptrend { bar.high > s.extreme } else { bar.low < s.extreme };
                    if new_extreme {
                        s.extreme = if s.uptrend { bar.high } else { bar.low };
                        s.af = (s.af + self.step).min(self.max_step);
                    }
                    s.next_sar
                };
                self.advance(s, sar, bar, &prev)
            }
        };
        self.state = Some(state);
        Some(state.next_sar)
    }

    fn advance(&self, mut s: SarState, sar: f64, bar: &Bar, prev: &Bar) -> SarState {
        let projected = sar + s.af * (s.extreme - sar);
        s.next_sar = if s.uptrend {
            projected.min(bar.low).min(prev.low)
        } else {
            projected.max(bar.high).max(prev.high)
        };
        s
    }
}
