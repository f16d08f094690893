//! Seeded synthetic price series.
//!
//! Closes follow either a geometric Brownian motion or an i.i.d. bootstrap of
//! observed returns. Every bar opens at the previous close (the first bar opens
//! at the start price). Highs and lows are synthetic: the body is widened on
//! both sides by `wick_factor · |close - open|`, with the low kept at or above
//! half the body low so prices stay positive. Dates are consecutive weekdays.

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use stse_core::ReturnSeries;

use crate::bar::{Bar, PriceSeries};
use crate::error::BacktestError;

pub const DEFAULT_WICK_FACTOR: f64 = 0.5;
pub const DEFAULT_VOLUME: f64 = 1_000_000.0;

pub fn default_start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2017, 1, 2).expect("valid date")
}

fn default_wick() -> f64 {
    DEFAULT_WICK_FACTOR
}

/// Geometric Brownian motion per bar:
/// `close[t] = close[t-1] · exp((drift - volatility²/2) + volatility · Z)`,
/// so `drift = 0` makes the close a martingale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbmSpec {
    pub seed: u64,
    pub n_bars: usize,
    /// Per-bar drift of the arithmetic mean return.
    pub drift: f64,
    /// Per-bar volatility of log returns.
    pub volatility: f64,
    pub start_price: f64,
    pub tick_size: f64,
    #[serde(default = "default_wick")]
    pub wick_factor: f64,
    #[serde(default = "default_start_date")]
    pub start_date: NaiveDate,
}

impl GbmSpec {
    pub fn new(seed: u64, n_bars: usize, drift: f64, volatility: f64, start_price: f64, tick_size: f64) -> Self {
        Self {
            seed,
            n_bars,
            drift,
            volatility,
            start_price,
            tick_size,
            wick_factor: DEFAULT_WICK_FACTOR,
            start_date: default_start_date(),
        }
    }
}

pub fn gbm_prices(spec: &GbmSpec, symbol: &str) -> Result<PriceSeries, BacktestError> {
    let invalid = |m: &str| Err(BacktestError::InvalidParams(m.to_string()));
    if spec.n_bars < 2 {
        return invalid("n_bars must be at least 2");
    }
    if !(spec.volatility.is_finite() && spec.volatility >= 0.0) {
        return invalid("volatility must be nonnegative");
    }
    if !(spec.start_price.is_finite() && spec.start_price > 0.0) {
        return invalid("start_price must be positive");
    }
    if !spec.drift.is_finite() || !(spec.wick_factor.is_finite() && spec.wick_factor >= 0.0) {
        return invalid("drift and wick_factor must be finite (wick_factor >= 0)");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let log_drift = spec.drift - 0.5 * spec.volatility * spec.volatility;
    let mut closes = Vec::with_capacity(spec.n_bars);
    let mut price = spec.start_price;
    for _ in 0..spec.n_bars {
        let z: f64 = StandardNormal.sample(&mut rng);
        price *= (log_drift + spec.volatility * z).exp();
        closes.push(price);
    }
    assemble(spec.start_price, &closes, spec.wick_factor, spec.start_date, symbol, spec.tick_size)
}

/// Resamples `source` returns with replacement: `close[t] = close[t-1] · (1 + r)`.
pub fn bootstrap_prices(
    seed: u64,
    source: &ReturnSeries,
    n_bars: usize,
    start_price: f64,
    tick_size: f64,
    symbol: &str,
) -> Result<PriceSeries, BacktestError> {
    if source.is_empty() {
        return Err(BacktestError::EmptySource);
    }
    if n_bars < 2 || !(start_price.is_finite() && start_price > 0.0) {
        return Err(BacktestError::InvalidParams(
            "n_bars must be at least 2 and start_price positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = source.values();
    let mut closes = Vec::with_capacity(n_bars);
    let mut price = start_price;
    for _ in 0..n_bars {
        let pick = rng.random_range(0..values.len() as u64) as usize;
        price *= 1.0 + values[pick];
        closes.push(price);
    }
    assemble(start_price, &closes, DEFAULT_WICK_FACTOR, default_start_date(), symbol, tick_size)
}

fn assemble(
    start_price: f64,
    closes: &[f64],
    wick_factor: f64,
    start_date: NaiveDate,
    symbol: &str,
    tick_size: f64,
) -> Result<PriceSeries, BacktestError> {
    let mut bars = Vec::with_capacity(closes.len());
    let mut open = start_price;
    let mut date = next_weekday(start_date);
    for &close in closes {
        let wick = (close - open).abs() * wick_factor;
        let body_low = open.min(close);
        bars.push(Bar {
            timestamp: date,
            open,
            high: open.max(close) + wick,
            low: (body_low - wick).max(0.5 * body_low),
            close,
            volume: DEFAULT_VOLUME,
        });
        open = close;
        date = next_weekday(date + Days::new(1));
    }
    PriceSeries::new(bars, symbol, tick_size)
}

fn next_weekday(mut date: NaiveDate) -> NaiveDate {
    while matches!(date.weekday(), Weekday::Sat | Weekday::Sun) {
        date = date + Days::new(1);
    }
    date
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_volatility_is_flat() {
        let p = gbm_prices(&GbmSpec::new(1, 50, 0.0, 0.0, 100.0, 0.01), "X").unwrap();
        assert!(p.bars().iter().all(|b| b.open == 100.0 && b.close == 100.0 && b.high == 100.0 && b.low == 100.0));
    }

    #[test]
    fn same_seed_same_series() {
        let spec = GbmSpec::new(42, 300, 0.0002, 0.01, 1.1, 0.0001);
        let a = gbm_prices(&spec, "EURUSD").unwrap();
        let b = gbm_prices(&spec, "EURUSD").unwrap();
        assert_eq!(a, b);
        let c = gbm_prices(&GbmSpec { seed: 43, ..spec }, "EURUSD").unwrap();
        assert_ne!(a, c);
        for w in a.bars().windows(2) {
            assert_eq!(w[1].open, w[0].close);
            assert!(w[1].timestamp > w[0].timestamp);
            assert!(!matches!(w[1].timestamp.weekday(), Weekday::Sat | Weekday::Sun));
        }
    }

    #[test]
    fn ito_correction() {
        // drift 0: E[log(final/start)] = -σ²/2 · n, sd of the mean = σ·√n / √paths
        let (sigma, n, paths) = (0.02, 252, 10_000);
        let mut total = 0.0;
        for seed in 0..paths {
            let p = gbm_prices(&GbmSpec::new(seed, n, 0.0, sigma, 100.0, 0.01), "X").unwrap();
            total += (p.bars()[n - 1].close / 100.0).ln();
        }
        let mean = total / paths as f64;
        let expected = -0.5 * sigma * sigma * n as f64;
        let stderr = sigma * (n as f64).sqrt() / (paths as f64).sqrt();
        assert!((mean - expected).abs() < 4.0 * stderr, "{mean} vs {expected} ± {stderr}");
    }

    #[test]
    fn invalid_specs() {
        assert!(gbm_prices(&GbmSpec::new(1, 1, 0.0, 0.01, 100.0, 0.01), "X").is_err());
        assert!(gbm_prices(&GbmSpec::new(1, 10, 0.0, -0.01, 100.0, 0.01), "X").is_err());
        assert!(gbm_prices(&GbmSpec::new(1, 10, 0.0, 0.01, 0.0, 0.01), "X").is_err());
    }

    #[test]
    fn bootstrap_constant_source() {
        let src = ReturnSeries::new(vec![0.01; 5], 252.0, "c").unwrap();
        let p = bootstrap_prices(9, &src, 20, 50.0, 0.01, "C").unwrap();
        for b in p.bars() {
            assert!((b.close / b.open - 1.01).abs() < 1e-12);
        }
        assert_eq!(p, bootstrap_prices(9, &src, 20, 50.0, 0.01, "C").unwrap());
    }

    #[test]
    fn bootstrap_moments_converge() {
        // Left-skewed source whose log returns sum to zero, so a million-step
        // path neither underflows nor overflows.
        let mut values = vec![-0.05, 0.01, 0.01, 0.01, 0.01];
        let growth: f64 = values.iter().map(|r| 1.0 + r).product();
        values.push(1.0 / growth - 1.0);
        let src = ReturnSeries::new(values, 252.0, "s").unwrap();
        let target = stse_core::moments(&src).unwrap();
        let p = bootstrap_prices(5, &src, 1_000_000, 100.0, 0.01, "S").unwrap();
        let draws: Vec<f64> = p.bars().iter().map(|b| b.close / b.open - 1.0).collect();
        let m = stse_core::moments_of(&draws).unwrap();
        assert!((m.mean - target.mean).abs() < 1e-4);
        // resampling draws from the empirical law, whose variance divides by n
        let n = src.len() as f64;
        let population_std = target.std * ((n - 1.0) / n).sqrt();
        assert!((m.std / population_std - 1.0).abs() < 0.01);
        assert!((m.skewness - target.skewness).abs() < 0.02);
        assert!((m.kurtosis - target.kurtosis).abs() < 0.05);
    }

    #[test]
    fn bootstrap_rejects_bad_input() {
        let src = ReturnSeries::new(vec![0.01], 252.0, "c").unwrap();
        assert!(bootstrap_prices(1, &src, 1, 50.0, 0.01, "C").is_err());
    }
}
