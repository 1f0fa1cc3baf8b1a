//! Rank-based per-type evaluation of score vectors against ground truth.

mod metrics;
mod report;

use thiserror::Error;

pub use metrics::{evaluate_scores, rank_auc, ranking, TypeMetrics};
pub use report::{
    cross_matrix, evaluate_detector, load_external_scores, EvaluationReport, OverallRow, ReportRow, METRICS,
};

use crate::data::CaseId;
use crate::detectors::{DetectorError, ScoreError};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("no score for case id {0}")]
    MissingScore(CaseId),
    #[error("score for case id {0} is not finite")]
    NonFiniteScore(CaseId),
    #[error("ground truth names case id {0}, which is not in the dataset")]
    UnknownTruthCase(CaseId),
    #[error("unknown metric {0:?}; expected one of rank_auc, recall_at_k, precision, recall")]
    UnknownMetric(String),
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error(transparent)]
    Scores(#[from] ScoreError),
}
