//! Moment estimates and the Sharpe ratio of a return series.
//!
//! Standard deviation uses the sample (n - 1) normalization. Skewness and
//! kurtosis are population-normalized standardized central moments, and
//! kurtosis is raw (3 for a Normal sample), which is what the PSR variance
//! term expects.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::series::ReturnSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MomentsError {
    #[error("at least 2 observations are required, got {0}")]
    TooFewObservations(usize),
    #[error("returns have zero variance")]
    ZeroVariance,
    #[error("moment summary fields must be finite with std >= 0 and kurtosis >= 1")]
    InvalidSummary,
}

/// Sample size and the first four moments of a return series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary<T> {
    pub n: usize,
    pub mean: T,
    pub std: T,
    pub skewness: T,
    pub kurtosis: T,
}

impl<T: Scalar> MomentSummary<T> {
    /// Builds a summary from externally estimated moments.
    pub fn new(n: usize, mean: T, std: T, skewness: T, kurtosis: T) -> Result<Self, MomentsError> {
        if n < 2 {
            return Err(MomentsError::TooFewObservations(n));
        }
        let finite = [mean, std, skewness, kurtosis].iter().all(|v| v.is_finite());
        if !finite || std < T::zero() || kurtosis < T::one() {
            return Err(MomentsError::InvalidSummary);
        }
        Ok(Self { n, mean, std, skewness, kurtosis })
    }

    /// Summary for a Normal sample (skewness 0, kurtosis 3) with the given size.
    pub fn gaussian(n: usize) -> Result<Self, MomentsError> {
        Self::new(n, T::zero(), T::one(), T::zero(), T::of(3.0))
    }
}

/// Computes mean, sample standard deviation, skewness and raw kurtosis.
pub fn moments<T: Scalar>(series: &ReturnSeries<T>) -> Result<MomentSummary<T>, MomentsError> {
    moments_of(series.values())
}

pub fn moments_of<T: Scalar>(values: &[T]) -> Result<MomentSummary<T>, MomentsError> {
    let n = values.len();
    if n < 2 {
        return Err(MomentsError::TooFewObservations(n));
    }
    let count = T::of_count(n);
    let mean = values.iter().fold(T::zero(), |acc, v| acc + *v) / count;

    let (mut m2, mut m3, mut m4) = (T::zero(), T::zero(), T::zero());
    for v in values {
        let d = *v - mean;
        let d2 = d * d;
        m2 = m2 + d2;
        m3 = m3 + d2 * d;
        m4 = m4 + d2 * d2;
    }
    // Constant series: the summed mean can be off by up to n ulps, so every
    // deviation below that bound is rounding noise.
    let scale = values.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    if m2 <= (count * T::epsilon() * scale).powi(2) * count {
        return Err(MomentsError::ZeroVariance);
    }
    let std = (m2 / (count - T::one())).sqrt();
    m2 = m2 / count;
    m3 = m3 / count;
    m4 = m4 / count;

    Ok(MomentSummary {
        n,
        mean,
        std,
        skewness: m3 / m2.powf(T::of(1.5)),
        kurtosis: m4 / (m2 * m2),
    })
}

/// Sharpe ratio at observation frequency plus its annualized display value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharpeEstimate<T> {
    pub per_period: T,
    pub annualized: T,
    pub risk_free_per_period: T,
}

/// `(mean - risk_free) / std`, annualized by `sqrt(periodicity)` for display.
pub fn sharpe<T: Scalar>(
    series: &ReturnSeries<T>,
    risk_free_per_period: T,
) -> Result<SharpeEstimate<T>, MomentsError> {
    let m = moments(series)?;
    Ok(sharpe_from_moments(&m, series.periodicity(), risk_free_per_period))
}

pub fn sharpe_from_moments<T: Scalar>(
    moments: &MomentSummary<T>,
    periodicity: T,
    risk_free_per_period: T,
) -> SharpeEstimate<T> {
    let per_period = (moments.mean - risk_free_per_period) / moments.std;
    SharpeEstimate {
        per_period,
        annualized: per_period * periodicity.sqrt(),
        risk_free_per_period,
    }
}
