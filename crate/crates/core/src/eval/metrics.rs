use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::data::{CaseId, Dataset};
use crate::detectors::ScoreVector;
use crate::inject::GroundTruth;
use crate::taxonomy::AnomalyType;

/// Rank and threshold metrics of one detector on one anomaly type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeMetrics {
    #[serde(rename = "type")]
    pub anomaly: AnomalyType,
    pub anomalies: usize,
    pub normals: usize,
    /// Probability that a random anomaly of the type outscores a random
    /// normal case; ties count half.
    pub rank_auc: f64,
    /// Share of the type's cases among the `k` highest scores.
    pub recall_at_k: f64,
    pub k: usize,
    /// Threshold metrics; absent when the scores carry no flags.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precision: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recall: Option<f64>,
}

/// Rank-AUC of `positives` against `negatives` using midranks, so ties
/// contribute one half. Returns 0.5 when either side is empty.
pub fn rank_auc(positives: &[f64], negatives: &[f64]) -> f64 {
    if positives.is_empty() || negatives.is_empty() {
        return 0.5;
    }
    let mut all: Vec<(f64, bool)> = positives
        .iter()
        .map(|&s| (s, true))
        .chain(negatives.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    // sum of midranks (1-based) of the positives
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let j = i + all[i..].iter().take_while(|e| e.0 == all[i].0).count();
        let midrank = (i + 1 + j) as f64 / 2.0;
        let hits = all[i..j].iter().filter(|e| e.1).count();
        rank_sum += midrank * hits as f64;
        i = j;
    }
    let p = positives.len() as f64;
    let q = negatives.len() as f64;
    (rank_sum - p * (p + 1.0) / 2.0) / (p * q)
}

/// Cases ordered by descending score, ties by ascending case id.
pub fn ranking(ids: &[CaseId], scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|&a, &b| match scores[b].total_cmp(&scores[a]) {
        Ordering::Equal => ids[a].cmp(&ids[b]),
        other => other,
    });
    order
}

/// Row-aligned scores for every dataset case.
pub(crate) fn aligned_scores(scores: &ScoreVector, dataset: &Dataset) -> Result<(Vec<f64>, Option<Vec<bool>>), EvalError> {
    let lookup = scores.lookup();
    let mut out = Vec::with_capacity(dataset.len());
    let mut flags = scores.flags.as_ref().map(|_| Vec::with_capacity(dataset.len()));
    for id in dataset.case_ids() {
        let &i = lookup.get(id).ok_or(EvalError::MissingScore(*id))?;
        let s = scores.scores[i];
        if !s.is_finite() {
            return Err(EvalError::NonFiniteScore(*id));
        }
        out.push(s);
        if let (Some(f), Some(src)) = (flags.as_mut(), scores.flags.as_ref()) {
            f.push(src[i]);
        }
    }
    Ok((out, flags))
}

pub(crate) fn truth_types(truth: &GroundTruth, dataset: &Dataset) -> Result<HashMap<CaseId, AnomalyType>, EvalError> {
    let known: HashSet<CaseId> = dataset.case_ids().iter().copied().collect();
    if let Some(e) = truth.entries.iter().find(|e| !known.contains(&e.case_id)) {
        return Err(EvalError::UnknownTruthCase(e.case_id));
    }
    Ok(truth.types())
}

/// Metrics for one set of positives against the normal cases.
pub(crate) fn metrics_for(
    anomaly: AnomalyType,
    ids: &[CaseId],
    scores: &[f64],
    flags: Option<&[bool]>,
    is_positive: impl Fn(usize) -> bool,
    is_normal: impl Fn(usize) -> bool,
) -> TypeMetrics {
    let population: Vec<usize> = (0..ids.len()).filter(|&r| is_positive(r) || is_normal(r)).collect();
    let pos: Vec<f64> = population.iter().filter(|&&r| is_positive(r)).map(|&r| scores[r]).collect();
    let neg: Vec<f64> = population.iter().filter(|&&r| !is_positive(r)).map(|&r| scores[r]).collect();
    let k = pos.len();
    let pop_ids: Vec<CaseId> = population.iter().map(|&r| ids[r]).collect();
    let pop_scores: Vec<f64> = population.iter().map(|&r| scores[r]).collect();
    let top = ranking(&pop_ids, &pop_scores);
    let hits = top.iter().take(k).filter(|&&i| is_positive(population[i])).count();
    let recall_at_k = if k == 0 { 0.0 } else { hits as f64 / k as f64 };
    let (precision, recall) = match flags {
        None => (None, None),
        Some(f) => {
            let flagged = population.iter().filter(|&&r| f[r]).count();
            let true_flags = population.iter().filter(|&&r| f[r] && is_positive(r)).count();
            let precision = if flagged == 0 { 0.0 } else { true_flags as f64 / flagged as f64 };
            let recall = if k == 0 { 0.0 } else { true_flags as f64 / k as f64 };
            (Some(precision), Some(recall))
        }
    };
    TypeMetrics {
        anomaly,
        anomalies: pos.len(),
        normals: neg.len(),
        rank_auc: rank_auc(&pos, &neg),
        recall_at_k,
        k,
        precision,
        recall,
    }
}

/// Per-type metrics of `scores` against `truth`, one entry per type with at
/// least one ground-truth case. Each type is scored against the normal
/// cases only; anomalies of other types are left out.
pub fn evaluate_scores(scores: &ScoreVector, truth: &GroundTruth, dataset: &Dataset) -> Result<Vec<TypeMetrics>, EvalError> {
    let (aligned, flags) = aligned_scores(scores, dataset)?;
    let types = truth_types(truth, dataset)?;
    let ids = dataset.case_ids();
    let row_type: Vec<Option<AnomalyType>> = ids.iter().map(|id| types.get(id).copied()).collect();
    Ok(AnomalyType::ALL
        .iter()
        .filter(|t| truth.count(**t) > 0)
        .map(|&t| {
            metrics_for(
                t,
                ids,
                &aligned,
                flags.as_deref(),
                |r| row_type[r] == Some(t),
                |r| row_type[r].is_none(),
            )
        })
        .collect())
}
