//! Statistical evaluation of trading strategies.
//!
//! Everything here is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64`, which is what the rest of the
//! workspace uses.

pub mod evaluator;
pub mod moments;
pub mod normal;
pub mod psr;
pub mod scalar;
pub mod series;

pub use evaluator::{
    evaluate, evaluate_matrix, Answer, ChecklistEntry, ChecklistItem, ConditionsChecklist,
    EvaluateError, ExpectedMaxSource, Outcome, ReasonCode, TrainingWindow,
};
pub use moments::{moments, moments_of, sharpe, sharpe_from_moments, MomentsError};
pub use normal::{std_normal_cdf, std_normal_pdf, std_normal_quantile, std_normal_sf, NormalError};
pub use psr::{
    expected_max_sharpe, min_backtest_length, min_track_record_observations, mtrl, mtrl_with_floor,
    psr, psr_for_length, variance_term, PsrError, MIN_TRACK_RECORD_OBSERVATIONS,
};
pub use scalar::Scalar;
pub use series::{equity_to_returns, ReturnConvention, SeriesError};

pub type ReturnSeries = series::ReturnSeries<f64>;
pub type EquityCurve = series::EquityCurve<f64>;
pub type MomentSummary = moments::MomentSummary<f64>;
pub type SharpeEstimate = moments::SharpeEstimate<f64>;
pub type SkillAssessment = psr::SkillAssessment<f64>;
pub type TrialSelectionBound = psr::TrialSelectionBound<f64>;
pub type EvaluationConfig = evaluator::EvaluationConfig<f64>;
pub type EvaluationVerdict = evaluator::EvaluationVerdict<f64>;
pub type ThresholdResult = evaluator::ThresholdResult<f64>;
pub type SelectionCheck = evaluator::SelectionCheck<f64>;
pub type MatrixEvaluation = evaluator::MatrixEvaluation<f64>;
