//! Return series and equity curves.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeriesError {
    #[error("return series is empty")]
    Empty,
    #[error("return at index {index} is {value}, returns must be finite (and greater than -1 for simple returns)")]
    InvalidReturn { index: usize, value: f64 },
    #[error("periodicity must be a positive finite number of observations per year, got {0}")]
    InvalidPeriodicity(f64),
    #[error("{dates} dates supplied for {values} returns")]
    DateCountMismatch { dates: usize, values: usize },
    #[error("timestamps must be strictly increasing (index {index})")]
    NonMonotonicTimestamps { index: usize },
    #[error("equity curve needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("equity at index {index} is {value}, simple returns need positive equity")]
    NonPositiveEquity { index: usize, value: f64 },
    #[error("equity at index {index} is not finite")]
    NonFiniteEquity { index: usize },
}

/// How per-period returns were derived from an equity curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReturnConvention {
    /// `equity[i+1] / equity[i] - 1`.
    #[default]
    Simple,
    /// `(equity[i+1] - equity[i]) / equity[0]`: period P&L as a fraction of the
    /// initial deposit. Stays defined when the account trades through zero equity.
    DepositRelative,
}

impl ReturnConvention {
    pub fn as_str(self) -> &'static str {
        match self {
            ReturnConvention::Simple => "simple",
            ReturnConvention::DepositRelative => "deposit_relative",
        }
    }
}

/// Per-period fractional returns observed at a fixed frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries<T> {
    values: Vec<T>,
    periodicity: T,
    label: String,
    #[serde(default)]
    convention: ReturnConvention,
    /// End-of-period date of each return, when known.
    #[serde(default)]
    dates: Option<Vec<NaiveDate>>,
}

impl<T: Scalar> ReturnSeries<T> {
    /// `periodicity` is the number of observations per year (252 daily, 52 weekly, 12 monthly).
    pub fn new(values: Vec<T>, periodicity: T, label: impl Into<String>) -> Result<Self, SeriesError> {
        Self::with_parts(values, periodicity, label, ReturnConvention::Simple)
    }

    /// Like [`ReturnSeries::new`]. Deposit-relative returns only need to be
    /// finite: a period can lose more than the initial deposit.
    pub fn with_parts(
        values: Vec<T>,
        periodicity: T,
        label: impl Into<String>,
        convention: ReturnConvention,
    ) -> Result<Self, SeriesError> {
        if values.is_empty() {
            return Err(SeriesError::Empty);
        }
        if !(periodicity.is_finite() && periodicity > T::zero()) {
            return Err(SeriesError::InvalidPeriodicity(periodicity.to_f64().unwrap_or(f64::NAN)));
        }
        let floor = match convention {
            ReturnConvention::Simple => -T::one(),
            ReturnConvention::DepositRelative => T::neg_infinity(),
        };
        if let Some((index, value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > floor))
        {
            return Err(SeriesError::InvalidReturn {
                index,
                value: value.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self {
            values,
            periodicity,
            label: label.into(),
            convention,
            dates: None,
        })
    }

    /// Attaches one strictly increasing date per return.
    pub fn with_dates(mut self, dates: Vec<NaiveDate>) -> Result<Self, SeriesError> {
        if dates.len() != self.values.len() {
            return Err(SeriesError::DateCountMismatch {
                dates: dates.len(),
                values: self.values.len(),
            });
        }
        if let Some(index) = first_non_increasing(&dates) {
            return Err(SeriesError::NonMonotonicTimestamps { index });
        }
        self.dates = Some(dates);
        Ok(self)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false: construction rejects empty series.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn periodicity(&self) -> T {
        self.periodicity
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn convention(&self) -> ReturnConvention {
        self.convention
    }

    pub fn dates(&self) -> Option<&[NaiveDate]> {
        self.dates.as_deref()
    }

    /// Length of the record in years.
    pub fn years(&self) -> T {
        T::of_count(self.len()) / self.periodicity
    }

    /// Total return over the record as a fraction: compounded for simple
    /// returns, summed for deposit-relative ones.
    pub fn total_return(&self) -> T {
        match self.convention {
            ReturnConvention::Simple => {
                self.values.iter().fold(T::one(), |acc, r| acc * (T::one() + *r)) - T::one()
            }
            ReturnConvention::DepositRelative => {
                self.values.iter().fold(T::zero(), |acc, r| acc + *r)
            }
        }
    }
}

/// Account value marked to market over time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquityCurve<T> {
    points: Vec<(NaiveDate, T)>,
}

impl<T: Scalar> EquityCurve<T> {
    pub fn new(points: Vec<(NaiveDate, T)>) -> Result<Self, SeriesError> {
        let dates: Vec<NaiveDate> = points.iter().map(|(d, _)| *d).collect();
        if let Some(index) = first_non_increasing(&dates) {
            return Err(SeriesError::NonMonotonicTimestamps { index });
        }
        if let Some(index) = points.iter().position(|(_, e)| !e.is_finite()) {
            return Err(SeriesError::NonFiniteEquity { index });
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(NaiveDate, T)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> Option<T> {
        self.points.first().map(|(_, e)| *e)
    }

    pub fn last(&self) -> Option<T> {
        self.points.last().map(|(_, e)| *e)
    }

    pub fn min_equity(&self) -> Option<T> {
        self.points.iter().map(|(_, e)| *e).reduce(T::min)
    }
}

/// Converts an equity curve into per-period returns. Each return is dated at
/// the later of its two equity points.
///
/// With [`ReturnConvention::Simple`] every equity value must be positive. With
/// [`ReturnConvention::DepositRelative`] only the first one must be.
pub fn equity_to_returns<T: Scalar>(
    curve: &EquityCurve<T>,
    periodicity: T,
    convention: ReturnConvention,
) -> Result<ReturnSeries<T>, SeriesError> {
    let points = curve.points();
    if points.len() < 2 {
        return Err(SeriesError::TooFewPoints(points.len()));
    }
    let non_positive = |(index, (_, e)): (usize, &(NaiveDate, T))| {
        (*e <= T::zero()).then(|| SeriesError::NonPositiveEquity {
            index,
            value: e.to_f64().unwrap_or(f64::NAN),
        })
    };
    let values: Vec<T> = match convention {
        ReturnConvention::Simple => {
            if let Some(err) = points.iter().enumerate().find_map(non_positive) {
                return Err(err);
            }
            points.windows(2).map(|w| w[1].1 / w[0].1 - T::one()).collect()
        }
        ReturnConvention::DepositRelative => {
            if let Some(err) = points.iter().take(1).enumerate().find_map(non_positive) {
                return Err(err);
            }
            let deposit = points[0].1;
            points.windows(2).map(|w| (w[1].1 - w[0].1) / deposit).collect()
        }
    };
    let dates = points[1..].iter().map(|(d, _)| *d).collect();
    ReturnSeries::with_parts(values, periodicity, "", convention)?.with_dates(dates)
}

fn first_non_increasing(dates: &[NaiveDate]) -> Option<usize> {
    dates.windows(2).position(|w| w[1] <= w[0]).map(|i| i + 1)
}
