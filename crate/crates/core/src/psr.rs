//! Probabilistic Sharpe ratio, minimum track record length and minimum
//! backtest length.
//!
//! Every Sharpe ratio here is at observation frequency (per period), never
//! annualized. With `V = 1 - γ₃·SR̂ + (γ₄ - 1)/4 · SR̂²`:
//!
//! ```text
//! PSR(SR*) = Φ[ (SR̂ - SR*) · √(n - 1) / √V ]
//! n*       = 1 + V · (Z_α / (SR̂ - SR*))²
//! MinBTL   = 2·ln(N) / E[max_N]²
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::moments::MomentSummary;
use crate::normal::{std_normal_cdf, std_normal_quantile};
use crate::scalar::Scalar;

/// A track record shorter than this many observations is never accepted.
pub const MIN_TRACK_RECORD_OBSERVATIONS: u64 = 30;

/// Euler–Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum PsrError {
    #[error("variance term 1 - skew·SR + (kurt - 1)/4·SR² = {0} is not positive")]
    NonPositiveVarianceTerm(f64),
    #[error("observed SR {sr_hat} does not exceed threshold {sr_threshold}")]
    ThresholdNotExceeded { sr_hat: f64, sr_threshold: f64 },
    #[error("confidence {0} is outside (0, 1)")]
    InvalidConfidence(f64),
    #[error("track record length {0} must be at least 1 observation")]
    TooShort(f64),
    #[error("non-finite input")]
    NonFinite,
    #[error("expected maximum Sharpe ratio must be positive, got {0}")]
    InvalidExpectedMax(f64),
    #[error("number of trials must be at least 1")]
    InvalidTrialCount,
    #[error("expected maximum needs at least 2 trials, got {0}")]
    TooFewTrials(u64),
    #[error("periodicity must be positive, got {0}")]
    InvalidPeriodicity(f64),
}

fn f<T: Scalar>(v: T) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// `1 - γ₃·SR̂ + (γ₄ - 1)/4 · SR̂²`, the non-normality correction to the
/// asymptotic variance of SR̂.
pub fn variance_term<T: Scalar>(skewness: T, kurtosis: T, sr_hat: T) -> T {
    T::one() - skewness * sr_hat + (kurtosis - T::one()) / T::of(4.0) * sr_hat * sr_hat
}

fn checked_variance_term<T: Scalar>(skewness: T, kurtosis: T, sr_hat: T) -> Result<T, PsrError> {
    if ![skewness, kurtosis, sr_hat].iter().all(|v| v.is_finite()) {
        return Err(PsrError::NonFinite);
    }
    let v = variance_term(skewness, kurtosis, sr_hat);
    if v > T::zero() {
        Ok(v)
    } else {
        Err(PsrError::NonPositiveVarianceTerm(f(v)))
    }
}

/// PSR for an explicit (possibly fractional) track record length `n`.
pub fn psr_for_length<T: Scalar>(
    n: T,
    skewness: T,
    kurtosis: T,
    sr_hat: T,
    sr_threshold: T,
) -> Result<T, PsrError> {
    if !(n.is_finite() && sr_threshold.is_finite()) {
        return Err(PsrError::NonFinite);
    }
    if n < T::one() {
        return Err(PsrError::TooShort(f(n)));
    }
    let v = checked_variance_term(skewness, kurtosis, sr_hat)?;
    let z = (sr_hat - sr_threshold) * (n - T::one()).sqrt() / v.sqrt();
    Ok(std_normal_cdf(z))
}

/// Probability that the true Sharpe ratio exceeds `sr_threshold`, given the
/// observed `sr_hat` and the sample size and higher moments in `moments`.
pub fn psr<T: Scalar>(moments: &MomentSummary<T>, sr_hat: T, sr_threshold: T) -> Result<T, PsrError> {
    psr_for_length(
        T::of_count(moments.n),
        moments.skewness,
        moments.kurtosis,
        sr_hat,
        sr_threshold,
    )
}

/// Raw (unfloored, fractional) minimum track record length n*.
pub fn min_track_record_observations<T: Scalar>(
    skewness: T,
    kurtosis: T,
    sr_hat: T,
    sr_threshold: T,
    confidence: T,
) -> Result<T, PsrError> {
    if !(confidence > T::zero() && confidence < T::one()) {
        return Err(PsrError::InvalidConfidence(f(confidence)));
    }
    if !sr_threshold.is_finite() {
        return Err(PsrError::NonFinite);
    }
    let v = checked_variance_term(skewness, kurtosis, sr_hat)?;
    if sr_hat <= sr_threshold {
        return Err(PsrError::ThresholdNotExceeded {
            sr_hat: f(sr_hat),
            sr_threshold: f(sr_threshold),
        });
    }
    let z = std_normal_quantile(confidence).map_err(|_| PsrError::InvalidConfidence(f(confidence)))?;
    let ratio = z / (sr_hat - sr_threshold);
    Ok(T::one() + v * ratio * ratio)
}

/// PSR and minimum track record length for one threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkillAssessment<T> {
    pub sr_hat: T,
    pub sr_threshold: T,
    pub confidence: T,
    pub psr: T,
    /// n* exactly as the formula gives it.
    pub mtrl_observations: T,
    /// `max(⌈n*⌉, floor)`.
    pub mtrl_floored: u64,
    pub mtrl_years: T,
    pub n_observed: usize,
    pub periodicity: T,
}

impl<T: Scalar> SkillAssessment<T> {
    /// True when PSR reaches the confidence level and the record is at least
    /// as long as the floored minimum track record.
    pub fn passed(&self) -> bool {
        self.psr >= self.confidence && self.n_observed as u64 >= self.mtrl_floored
    }

    pub fn observed_years(&self) -> T {
        T::of_count(self.n_observed) / self.periodicity
    }
}

/// Minimum track record length at `confidence`, floored at 30 observations.
pub fn mtrl<T: Scalar>(
    moments: &MomentSummary<T>,
    sr_hat: T,
    sr_threshold: T,
    confidence: T,
    periodicity: T,
) -> Result<SkillAssessment<T>, PsrError> {
    mtrl_with_floor(
        moments,
        sr_hat,
        sr_threshold,
        confidence,
        periodicity,
        MIN_TRACK_RECORD_OBSERVATIONS,
    )
}

/// As [`mtrl`], with a floor other than 30 (it is never allowed below 1).
pub fn mtrl_with_floor<T: Scalar>(
    moments: &MomentSummary<T>,
    sr_hat: T,
    sr_threshold: T,
    confidence: T,
    periodicity: T,
    floor: u64,
) -> Result<SkillAssessment<T>, PsrError> {
    if !(periodicity.is_finite() && periodicity > T::zero()) {
        return Err(PsrError::InvalidPeriodicity(f(periodicity)));
    }
    let raw = min_track_record_observations(
        moments.skewness,
        moments.kurtosis,
        sr_hat,
        sr_threshold,
        confidence,
    )?;
    let probability = psr(moments, sr_hat, sr_threshold)?;
    let floored = ceil_count(raw).max(floor.max(1));
    Ok(SkillAssessment {
        sr_hat,
        sr_threshold,
        confidence,
        psr: probability,
        mtrl_observations: raw,
        mtrl_floored: floored,
        mtrl_years: T::from_u64(floored).unwrap_or_else(T::infinity) / periodicity,
        n_observed: moments.n,
        periodicity,
    })
}

fn ceil_count<T: Scalar>(n: T) -> u64 {
    // n* is at least 1; astronomically long requirements saturate.
    n.ceil().to_u64().unwrap_or(u64::MAX)
}

/// Minimum backtest length guarding against selecting the best of N
/// zero-skill trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSelectionBound<T> {
    pub n_trials: u64,
    /// Expected maximum annualized Sharpe ratio across the N trials.
    pub expected_max_sharpe: T,
    pub min_backtest_years: T,
}

/// `2·ln(N) / E[max_N]²` years.
pub fn min_backtest_length<T: Scalar>(
    n_trials: u64,
    expected_max_sharpe: T,
) -> Result<TrialSelectionBound<T>, PsrError> {
    if n_trials == 0 {
        return Err(PsrError::InvalidTrialCount);
    }
    if !(expected_max_sharpe.is_finite() && expected_max_sharpe > T::zero()) {
        return Err(PsrError::InvalidExpectedMax(f(expected_max_sharpe)));
    }
    let n = T::from_u64(n_trials).ok_or(PsrError::NonFinite)?;
    Ok(TrialSelectionBound {
        n_trials,
        expected_max_sharpe,
        min_backtest_years: T::of(2.0) * n.ln() / (expected_max_sharpe * expected_max_sharpe),
    })
}

/// Extreme-value approximation of the expected maximum of N independent
/// standard normal Sharpe ratios:
/// `(1 - γ)·Φ⁻¹(1 - 1/N) + γ·Φ⁻¹(1 - 1/(N·e))`, γ the Euler–Mascheroni constant.
///
/// This is an external approximation supplied for callers without their own
/// estimate of `E[max_N]`; it assumes unit variance of Sharpe ratios across
/// trials.
pub fn expected_max_sharpe<T: Scalar>(n_trials: u64) -> Result<T, PsrError> {
    if n_trials < 2 {
        return Err(PsrError::TooFewTrials(n_trials));
    }
    let n = T::from_u64(n_trials).ok_or(PsrError::NonFinite)?;
    let gamma = T::of(EULER_GAMMA);
    let q = |p: T| std_normal_quantile(p).map_err(|_| PsrError::NonFinite);
    let first = q(T::one() - T::one() / n)?;
    let second = q(T::one() - T::one() / (n * T::E()))?;
    Ok((T::one() - gamma) * first + gamma * second)
}
