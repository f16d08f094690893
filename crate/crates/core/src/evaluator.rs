//! Strategy verdicts: conditions checklist, per-threshold skill assessments
//! and the three-way outcome.

use std::fmt;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::moments::{moments, sharpe_from_moments, MomentSummary, MomentsError, SharpeEstimate};
use crate::psr::{
    expected_max_sharpe, min_backtest_length, mtrl_with_floor, psr, PsrError, SkillAssessment,
    TrialSelectionBound, MIN_TRACK_RECORD_OBSERVATIONS,
};
use crate::scalar::Scalar;
use crate::series::{ReturnConvention, ReturnSeries};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvaluateError {
    #[error("invalid evaluation config: {0}")]
    InvalidConfig(String),
    #[error("at least 2 observations are required, got {0}")]
    TooFewObservations(usize),
    #[error("a training window is declared but the series carries no dates")]
    MissingDates,
    #[error("observation dated {date} falls inside the training window plus embargo (ends {embargo_end})")]
    EmbargoViolation { date: NaiveDate, embargo_end: NaiveDate },
    #[error("no scenarios to evaluate")]
    NoScenarios,
}

/// Operator answer to one checklist question.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Answer {
    Yes,
    No,
    #[default]
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ChecklistEntry {
    #[serde(default)]
    pub answer: Answer,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ChecklistEntry {
    pub fn yes() -> Self {
        Self { answer: Answer::Yes, note: None }
    }

    pub fn no(note: impl Into<String>) -> Self {
        Self { answer: Answer::No, note: Some(note.into()) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChecklistItem {
    /// Max traded volume well under 10 basis points of the asset's average volume.
    VolumeImpactNegligible,
    /// Short positions charged at the highest borrow cost seen in the market.
    ShortingCostsModeled,
    TransactionCostsIncluded,
    /// Asset selection criteria stated using only information available at the start.
    SurvivorBiasCriteriaStated,
    /// Evaluation data separated from training data by an embargo.
    DataLeakageEmbargoApplied,
    RiskMeasurementPresent,
}

impl ChecklistItem {
    pub const ALL: [ChecklistItem; 6] = [
        ChecklistItem::VolumeImpactNegligible,
        ChecklistItem::ShortingCostsModeled,
        ChecklistItem::TransactionCostsIncluded,
        ChecklistItem::SurvivorBiasCriteriaStated,
        ChecklistItem::DataLeakageEmbargoApplied,
        ChecklistItem::RiskMeasurementPresent,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ChecklistItem::VolumeImpactNegligible => "volume_impact_negligible",
            ChecklistItem::ShortingCostsModeled => "shorting_costs_modeled",
            ChecklistItem::TransactionCostsIncluded => "transaction_costs_included",
            ChecklistItem::SurvivorBiasCriteriaStated => "survivor_bias_criteria_stated",
            ChecklistItem::DataLeakageEmbargoApplied => "data_leakage_embargo_applied",
            ChecklistItem::RiskMeasurementPresent => "risk_measurement_present",
        }
    }
}

/// Operator-attested conditions. Unanswered entries stay `Unknown`, which is
/// never read as `Yes`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionsChecklist {
    #[serde(default)]
    pub volume_impact_negligible: ChecklistEntry,
    #[serde(default)]
    pub shorting_costs_modeled: ChecklistEntry,
    #[serde(default)]
    pub transaction_costs_included: ChecklistEntry,
    #[serde(default)]
    pub survivor_bias_criteria_stated: ChecklistEntry,
    #[serde(default)]
    pub data_leakage_embargo_applied: ChecklistEntry,
    #[serde(default)]
    pub risk_measurement_present: ChecklistEntry,
}

impl ConditionsChecklist {
    /// Every entry answered `Yes`.
    pub fn affirmed() -> Self {
        let mut c = Self::default();
        for item in ChecklistItem::ALL {
            c.entry_mut(item).answer = Answer::Yes;
        }
        c
    }

    pub fn entry(&self, item: ChecklistItem) -> &ChecklistEntry {
        match item {
            ChecklistItem::VolumeImpactNegligible => &self.volume_impact_negligible,
            ChecklistItem::ShortingCostsModeled => &self.shorting_costs_modeled,
            ChecklistItem::TransactionCostsIncluded => &self.transaction_costs_included,
            ChecklistItem::SurvivorBiasCriteriaStated => &self.survivor_bias_criteria_stated,
            ChecklistItem::DataLeakageEmbargoApplied => &self.data_leakage_embargo_applied,
            ChecklistItem::RiskMeasurementPresent => &self.risk_measurement_present,
        }
    }

    pub fn entry_mut(&mut self, item: ChecklistItem) -> &mut ChecklistEntry {
        match item {
            ChecklistItem::VolumeImpactNegligible => &mut self.volume_impact_negligible,
            ChecklistItem::ShortingCostsModeled => &mut self.shorting_costs_modeled,
            ChecklistItem::TransactionCostsIncluded => &mut self.transaction_costs_included,
            ChecklistItem::SurvivorBiasCriteriaStated => &mut self.survivor_bias_criteria_stated,
            ChecklistItem::DataLeakageEmbargoApplied => &mut self.data_leakage_embargo_applied,
            ChecklistItem::RiskMeasurementPresent => &mut self.risk_measurement_present,
        }
    }

    pub fn with(mut self, item: ChecklistItem, answer: Answer) -> Self {
        self.entry_mut(item).answer = answer;
        self
    }

    pub fn answers(&self) -> impl Iterator<Item = (ChecklistItem, Answer)> + '_ {
        ChecklistItem::ALL.into_iter().map(|item| (item, self.entry(item).answer))
    }

    pub fn all_yes(&self) -> bool {
        self.answers().all(|(_, a)| a == Answer::Yes)
    }

    pub fn any_no(&self) -> bool {
        self.answers().any(|(_, a)| a == Answer::No)
    }
}

/// Training data span. Evaluated observations may not fall between `start`
/// and `end` plus the embargo gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingWindow {
    pub start: NaiveDate,
    pub end: NaiveDate,
    /// Gap after `end`, in observation periods (one period spans
    /// `365.25 / periodicity` calendar days).
    #[serde(default = "default_embargo_periods")]
    pub embargo_periods: f64,
}

fn default_embargo_periods() -> f64 {
    1.0
}

impl TrainingWindow {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Self {
        Self { start, end, embargo_periods: default_embargo_periods() }
    }

    fn embargo_days(&self, periodicity: f64) -> f64 {
        self.embargo_periods * 365.25 / periodicity
    }

    /// Rejects any date in `[start, end + embargo]`.
    pub fn check(&self, dates: &[NaiveDate], periodicity: f64) -> Result<(), EvaluateError> {
        let gap = self.embargo_days(periodicity);
        let embargo_end = self.end + chrono::Days::new(gap.floor() as u64);
        for &date in dates {
            if date >= self.start && ((date - self.end).num_days() as f64) <= gap {
                return Err(EvaluateError::EmbargoViolation { date, embargo_end });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct EvaluationConfig<T> {
    /// Per-period Sharpe ratio thresholds reported for every scenario.
    pub sr_thresholds: Vec<T>,
    /// Threshold that decides the verdict; the others only add pass flags.
    pub primary_threshold: T,
    pub confidence: T,
    /// Shortest acceptable track record; also the floor applied to n*.
    pub min_observations: usize,
    pub risk_free_per_period: T,
    pub training_window: Option<TrainingWindow>,
}

impl<T: Scalar> Default for EvaluationConfig<T> {
    fn default() -> Self {
        Self {
            sr_thresholds: vec![T::zero(), T::of(0.1)],
            primary_threshold: T::zero(),
            confidence: T::of(0.95),
            min_observations: MIN_TRACK_RECORD_OBSERVATIONS as usize,
            risk_free_per_period: T::zero(),
            training_window: None,
        }
    }
}

impl<T: Scalar> EvaluationConfig<T> {
    pub fn validate(&self) -> Result<(), EvaluateError> {
        let bad = |m: &str| Err(EvaluateError::InvalidConfig(m.to_string()));
        if self.sr_thresholds.iter().any(|t| !t.is_finite()) || !self.primary_threshold.is_finite() {
            return bad("thresholds must be finite");
        }
        if !(self.confidence > T::zero() && self.confidence < T::one()) {
            return bad("confidence must lie in (0, 1)");
        }
        if self.min_observations < 1 {
            return bad("min_observations must be at least 1");
        }
        if !self.risk_free_per_period.is_finite() {
            return bad("risk-free rate must be finite");
        }
        if let Some(w) = &self.training_window {
            if w.end < w.start || !(w.embargo_periods >= 0.0) {
                return bad("training window must have start <= end and a nonnegative embargo");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    ProbablyBad,
    LongerTrackRecordRequired,
    PerhapsSkillful,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::ProbablyBad => "probably_bad",
            Outcome::LongerTrackRecordRequired => "longer_track_record_required",
            Outcome::PerhapsSkillful => "perhaps_skillful",
        }
    }

    /// Ordering used by the dominance checks: bad < longer < skillful.
    pub fn rank(self) -> u8 {
        match self {
            Outcome::ProbablyBad => 0,
            Outcome::LongerTrackRecordRequired => 1,
            Outcome::PerhapsSkillful => 2,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::ProbablyBad => "Probably a bad strategy",
            Outcome::LongerTrackRecordRequired => "Longer track record required",
            Outcome::PerhapsSkillful => "Perhaps a skillful trading strategy",
        })
    }
}

/// Machine-readable reasons attached to a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "code", content = "item", rename_all = "snake_case")]
pub enum ReasonCode {
    ChecklistAnsweredNo(ChecklistItem),
    ChecklistUnanswered(ChecklistItem),
    /// Zero-variance returns (e.g. a strategy that never trades).
    DegenerateReturns,
    BelowObservationFloor,
    /// PSR could not be computed: the variance term is not positive.
    PathologicalMoments,
    /// The record is shorter than the minimum track record length.
    InsufficientTrackRecord,
    /// Long enough record but PSR at the primary threshold is below confidence.
    NoSkillAboveThreshold,
    SkillDemonstrated,
}

impl fmt::Display for ReasonCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReasonCode::ChecklistAnsweredNo(item) => write!(f, "checklist_answered_no:{}", item.as_str()),
            ReasonCode::ChecklistUnanswered(item) => write!(f, "checklist_unanswered:{}", item.as_str()),
            ReasonCode::DegenerateReturns => f.write_str("degenerate_returns"),
            ReasonCode::BelowObservationFloor => f.write_str("below_observation_floor"),
            ReasonCode::PathologicalMoments => f.write_str("pathological_moments"),
            ReasonCode::InsufficientTrackRecord => f.write_str("insufficient_track_record"),
            ReasonCode::NoSkillAboveThreshold => f.write_str("no_skill_above_threshold"),
            ReasonCode::SkillDemonstrated => f.write_str("skill_demonstrated"),
        }
    }
}

/// Result for one Sharpe ratio threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ThresholdResult<T> {
    Assessed(SkillAssessment<T>),
    /// SR̂ ≤ SR*: PSR is defined but no finite track record reaches confidence.
    NotExceeded { sr_threshold: T, sr_hat: T, psr: T },
    /// Neither PSR nor n* is defined (degenerate or pathological moments).
    Undefined { sr_threshold: T, reason: ReasonCode },
}

impl<T: Scalar> ThresholdResult<T> {
    pub fn sr_threshold(&self) -> T {
        match self {
            ThresholdResult::Assessed(a) => a.sr_threshold,
            ThresholdResult::NotExceeded { sr_threshold, .. } => *sr_threshold,
            ThresholdResult::Undefined { sr_threshold, .. } => *sr_threshold,
        }
    }

    pub fn psr(&self) -> Option<T> {
        match self {
            ThresholdResult::Assessed(a) => Some(a.psr),
            ThresholdResult::NotExceeded { psr, .. } => Some(*psr),
            ThresholdResult::Undefined { .. } => None,
        }
    }

    pub fn assessment(&self) -> Option<&SkillAssessment<T>> {
        match self {
            ThresholdResult::Assessed(a) => Some(a),
            _ => None,
        }
    }

    pub fn mtrl_years(&self) -> Option<T> {
        self.assessment().map(|a| a.mtrl_years)
    }

    pub fn passed(&self) -> bool {
        self.assessment().is_some_and(SkillAssessment::passed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationVerdict<T> {
    pub label: String,
    pub outcome: Outcome,
    pub n_observed: usize,
    pub periodicity: T,
    pub convention: ReturnConvention,
    pub total_return: T,
    pub moments: Option<MomentSummary<T>>,
    pub sharpe: Option<SharpeEstimate<T>>,
    pub confidence: T,
    /// One entry per configured threshold, in configuration order.
    pub assessments: Vec<ThresholdResult<T>>,
    pub primary: ThresholdResult<T>,
    pub checklist: ConditionsChecklist,
    pub reasons: Vec<ReasonCode>,
}

impl<T: Scalar> EvaluationVerdict<T> {
    pub fn observed_years(&self) -> T {
        T::of_count(self.n_observed) / self.periodicity
    }
}

fn assess<T: Scalar>(
    m: &MomentSummary<T>,
    sr_hat: T,
    threshold: T,
    config: &EvaluationConfig<T>,
    periodicity: T,
) -> ThresholdResult<T> {
    let floor = config.min_observations as u64;
    match mtrl_with_floor(m, sr_hat, threshold, config.confidence, periodicity, floor) {
        Ok(a) => ThresholdResult::Assessed(a),
        Err(PsrError::ThresholdNotExceeded { .. }) => match psr(m, sr_hat, threshold) {
            Ok(p) => ThresholdResult::NotExceeded { sr_threshold: threshold, sr_hat, psr: p },
            Err(_) => ThresholdResult::Undefined {
                sr_threshold: threshold,
                reason: ReasonCode::PathologicalMoments,
            },
        },
        Err(_) => ThresholdResult::Undefined {
            sr_threshold: threshold,
            reason: ReasonCode::PathologicalMoments,
        },
    }
}

/// Evaluates one out-of-sample track record.
pub fn evaluate<T: Scalar>(
    series: &ReturnSeries<T>,
    config: &EvaluationConfig<T>,
    checklist: &ConditionsChecklist,
) -> Result<EvaluationVerdict<T>, EvaluateError> {
    config.validate()?;
    let n = series.len();
    if n < 2 {
        return Err(EvaluateError::TooFewObservations(n));
    }
    let periodicity = series.periodicity();
    if let Some(window) = &config.training_window {
        let dates = series.dates().ok_or(EvaluateError::MissingDates)?;
        window.check(dates, periodicity.to_f64().unwrap_or(f64::NAN))?;
    }

    let mut reasons = Vec::new();
    for (item, answer) in checklist.answers() {
        match answer {
            Answer::No => reasons.push(ReasonCode::ChecklistAnsweredNo(item)),
            Answer::Unknown => reasons.push(ReasonCode::ChecklistUnanswered(item)),
            Answer::Yes => {}
        }
    }

    let summary = match moments(series) {
        Ok(m) => Some(m),
        Err(MomentsError::ZeroVariance) => None,
        Err(MomentsError::TooFewObservations(k)) => return Err(EvaluateError::TooFewObservations(k)),
        Err(MomentsError::InvalidSummary) => unreachable!("moments never builds an invalid summary"),
    };
    let sharpe = summary.map(|m| sharpe_from_moments(&m, periodicity, config.risk_free_per_period));

    let undefined = |t: T| ThresholdResult::Undefined {
        sr_threshold: t,
        reason: ReasonCode::DegenerateReturns,
    };
    let (assessments, primary) = match (&summary, &sharpe) {
        (Some(m), Some(s)) => {
            let list: Vec<_> = config
                .sr_thresholds
                .iter()
                .map(|t| assess(m, s.per_period, *t, config, periodicity))
                .collect();
            let primary = list
                .iter()
                .find(|r| r.sr_threshold() == config.primary_threshold)
                .cloned()
                .unwrap_or_else(|| assess(m, s.per_period, config.primary_threshold, config, periodicity));
            (list, primary)
        }
        _ => (
            config.sr_thresholds.iter().map(|t| undefined(*t)).collect(),
            undefined(config.primary_threshold),
        ),
    };

    let outcome = if summary.is_none() {
        reasons.push(ReasonCode::DegenerateReturns);
        Outcome::ProbablyBad
    } else if checklist.any_no() {
        Outcome::ProbablyBad
    } else if n < config.min_observations {
        reasons.push(ReasonCode::BelowObservationFloor);
        Outcome::LongerTrackRecordRequired
    } else {
        match &primary {
            ThresholdResult::Undefined { reason, .. } => {
                reasons.push(*reason);
                Outcome::LongerTrackRecordRequired
            }
            ThresholdResult::NotExceeded { .. } => {
                reasons.push(ReasonCode::NoSkillAboveThreshold);
                Outcome::ProbablyBad
            }
            ThresholdResult::Assessed(a) if (n as u64) < a.mtrl_floored => {
                reasons.push(ReasonCode::InsufficientTrackRecord);
                Outcome::LongerTrackRecordRequired
            }
            ThresholdResult::Assessed(a) if a.psr < config.confidence => {
                reasons.push(ReasonCode::NoSkillAboveThreshold);
                Outcome::ProbablyBad
            }
            ThresholdResult::Assessed(_) => {
                if checklist.all_yes() {
                    reasons.push(ReasonCode::SkillDemonstrated);
                    Outcome::PerhapsSkillful
                } else {
                    // unanswered checklist entries are already listed
                    Outcome::LongerTrackRecordRequired
                }
            }
        }
    };

    Ok(EvaluationVerdict {
        label: series.label().to_string(),
        outcome,
        n_observed: n,
        periodicity,
        convention: series.convention(),
        total_return: series.total_return(),
        moments: summary,
        sharpe,
        confidence: config.confidence,
        assessments,
        primary,
        checklist: checklist.clone(),
        reasons,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectedMaxSource {
    Supplied,
    /// Extreme-value approximation from [`expected_max_sharpe`].
    Approximation,
}

/// MinBTL check for a batch of N scenarios treated as N trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionCheck<T> {
    pub bound: TrialSelectionBound<T>,
    pub source: ExpectedMaxSource,
    pub longest_record_years: T,
    /// The longest record is shorter than the minimum backtest length.
    pub warning: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixEvaluation<T> {
    /// Per-scenario results, in input order.
    pub verdicts: Vec<Result<EvaluationVerdict<T>, EvaluateError>>,
    /// Absent for a single scenario without a supplied `E[max_N]`.
    pub selection: Option<SelectionCheck<T>>,
}

/// Evaluates scenarios independently (in parallel, results in input order)
/// and checks the batch against the minimum backtest length for N trials.
pub fn evaluate_matrix<T: Scalar>(
    scenarios: &[ReturnSeries<T>],
    config: &EvaluationConfig<T>,
    checklist: &ConditionsChecklist,
    expected_max: Option<T>,
) -> Result<MatrixEvaluation<T>, EvaluateError> {
    if scenarios.is_empty() {
        return Err(EvaluateError::NoScenarios);
    }
    config.validate()?;
    let verdicts = scenarios
        .par_iter()
        .map(|s| evaluate(s, config, checklist))
        .collect();

    let n_trials = scenarios.len() as u64;
    let emax = match expected_max {
        Some(e) => Some((e, ExpectedMaxSource::Supplied)),
        None => expected_max_sharpe::<T>(n_trials)
            .ok()
            .map(|e| (e, ExpectedMaxSource::Approximation)),
    };
    let selection = match emax {
        Some((e, source)) => {
            let bound = min_backtest_length(n_trials, e)
                .map_err(|err| EvaluateError::InvalidConfig(err.to_string()))?;
            let longest = scenarios
                .iter()
                .map(ReturnSeries::years)
                .fold(T::zero(), T::max);
            Some(SelectionCheck {
                bound,
                source,
                longest_record_years: longest,
                warning: longest < bound.min_backtest_years,
            })
        }
        None => None,
    };
    Ok(MatrixEvaluation { verdicts, selection })
}
