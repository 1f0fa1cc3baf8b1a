//! Univariate (global) detectors: extreme values, rare classes and their
//! conjunction. Each attribute is analyzed on its own.

use std::collections::HashMap;

use super::{require_attributes, DetectorError, DetectorParams, ScoreVector, SATURATED_SCORE};
use crate::data::{ColumnScale, Dataset};

/// Absolute deviation from the center in units of scale. With a zero scale
/// any value off the center saturates.
pub fn deviation(x: f64, scale: &ColumnScale) -> f64 {
    let d = (x - scale.center).abs();
    if scale.scale > 0.0 {
        (d / scale.scale).min(SATURATED_SCORE)
    } else if d == 0.0 {
        0.0
    } else {
        SATURATED_SCORE
    }
}

/// A label held by `count` of `n` cases is rare when its frequency is at most
/// `tau_rare` or its count at most `c_rare`. A label held by every case is
/// never rare.
pub fn is_rare_label(count: usize, n: usize, params: &DetectorParams) -> bool {
    n > 0 && count < n && (count as f64 / n as f64 <= params.tau_rare || count <= params.c_rare)
}

/// `-ln(count / n)`, written so that a universal label scores exactly 0.
pub fn rarity(count: usize, n: usize) -> f64 {
    (n as f64 / count as f64).ln()
}

/// Equal-width histogram used for the mid-range density check.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub min: f64,
    pub max: f64,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// `None` when disabled (`bins == 0`) or the column has no spread.
    pub fn new(values: &[f64], bins: usize) -> Option<Histogram> {
        if bins == 0 || values.is_empty() {
            return None;
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if min >= max {
            return None;
        }
        let mut h = Histogram { min, max, counts: vec![0; bins] };
        for &x in values {
            let b = h.bin_of(x).expect("value inside its own range");
            h.counts[b] += 1;
        }
        Some(h)
    }

    pub fn width(&self) -> f64 {
        (self.max - self.min) / self.counts.len() as f64
    }

    pub fn bin_of(&self, x: f64) -> Option<usize> {
        if x < self.min || x > self.max {
            return None;
        }
        let b = ((x - self.min) / self.width()).floor() as usize;
        Some(b.min(self.counts.len() - 1))
    }

    /// A bin is mid-range when occupied bins exist on both sides of it.
    pub fn is_mid_range(&self, bin: usize) -> bool {
        self.counts[..bin].iter().any(|&c| c > 0) && self.counts[bin + 1..].iter().any(|&c| c > 0)
    }

    pub fn bin_center(&self, bin: usize) -> f64 {
        self.min + (bin as f64 + 0.5) * self.width()
    }

    /// Score for a value in a sparsely populated mid-range bin, or `None`.
    /// `extra` counts the evaluated case when it is not part of the histogram.
    pub fn density_score(&self, x: f64, extra: usize, params: &DetectorParams) -> Option<f64> {
        let bin = self.bin_of(x)?;
        let count = self.counts[bin] + extra;
        if count == 0 || count > params.c_rare || !self.is_mid_range(bin) {
            return None;
        }
        let total: usize = self.counts.iter().sum::<usize>() + extra;
        Some(params.k_extreme + rarity(count, total))
    }
}

pub(crate) fn remove_sorted(sorted: &[f64], x: f64) -> Vec<f64> {
    let at = sorted.partition_point(|v| v.total_cmp(&x).is_lt());
    let mut out = Vec::with_capacity(sorted.len() - 1);
    out.extend_from_slice(&sorted[..at]);
    out.extend_from_slice(&sorted[at + 1..]);
    out
}

/// Per-attribute extreme-value scores, `[continuous attribute][row]`.
pub fn extreme_scores_by_attribute(dataset: &Dataset, params: &DetectorParams) -> Vec<Vec<f64>> {
    dataset
        .schema()
        .continuous_indices()
        .into_iter()
        .map(|index| {
            let values = dataset.continuous(index);
            let hist = Histogram::new(values, params.bins);
            let global = ColumnScale::compute(values, params.method);
            let mut sorted = values.to_vec();
            sorted.sort_by(f64::total_cmp);
            values
                .iter()
                .map(|&x| {
                    let scale = if params.leave_one_out {
                        ColumnScale::from_sorted(&remove_sorted(&sorted, x), params.method)
                    } else {
                        global
                    };
                    let dev = deviation(x, &scale);
                    match hist.as_ref().and_then(|h| h.density_score(x, 0, params)) {
                        Some(d) => dev.max(d),
                        None => dev,
                    }
                })
                .collect()
        })
        .collect()
}

/// Type I detector: case score is the largest per-attribute deviation
/// `|x - center| / scale`; flagged when it exceeds `k_extreme`. The number of
/// attributes over the cutoff is reported in `detail`.
pub fn detect_extreme_value(dataset: &Dataset, params: &DetectorParams) -> Result<ScoreVector, DetectorError> {
    params.validate()?;
    let continuous = dataset.schema().continuous_indices();
    require_attributes(continuous.len(), 1, "continuous")?;
    if dataset.len() < 2 {
        return Err(DetectorError::TooFewCases { need: 2, have: dataset.len() });
    }
    let by_attr = extreme_scores_by_attribute(dataset, params);
    let n = dataset.len();
    let mut scores = vec![0.0; n];
    let mut detail = vec![0u32; n];
    for attr in &by_attr {
        for (row, &s) in attr.iter().enumerate() {
            scores[row] = f64::max(scores[row], s);
            if s > params.k_extreme {
                detail[row] += 1;
            }
        }
    }
    let flags = scores.iter().map(|&s| s > params.k_extreme).collect();
    Ok(ScoreVector {
        detector_id: "type1".into(),
        case_ids: dataset.case_ids().to_vec(),
        scores,
        flags: Some(flags),
        detail: Some(detail),
        params: Some(params.clone()),
    })
}

pub(crate) fn label_counts(labels: &[String]) -> HashMap<&str, usize> {
    let mut counts = HashMap::new();
    for label in labels {
        *counts.entry(label.as_str()).or_default() += 1;
    }
    counts
}

/// Per-attribute rarity `-ln(freq(label))`, `[categorical attribute][row]`.
pub fn rarity_scores_by_attribute(dataset: &Dataset) -> Vec<Vec<f64>> {
    let n = dataset.len();
    dataset
        .schema()
        .categorical_indices()
        .into_iter()
        .map(|index| {
            let labels = dataset.categorical(index);
            let counts = label_counts(labels);
            labels.iter().map(|label| rarity(counts[label.as_str()], n)).collect()
        })
        .collect()
}

/// Type II detector: case score is the sum over categorical attributes of
/// `-ln(freq(label))`; flagged when any attribute holds a rare label.
pub fn detect_rare_class(dataset: &Dataset, params: &DetectorParams) -> Result<ScoreVector, DetectorError> {
    params.validate()?;
    let categorical = dataset.schema().categorical_indices();
    require_attributes(categorical.len(), 1, "categorical")?;
    let n = dataset.len();
    let mut scores = vec![0.0; n];
    for attr in rarity_scores_by_attribute(dataset) {
        for (row, s) in attr.into_iter().enumerate() {
            scores[row] += s;
        }
    }
    let mut detail = vec![0u32; n];
    for index in categorical {
        let labels = dataset.categorical(index);
        let counts = label_counts(labels);
        for (row, label) in labels.iter().enumerate() {
            if is_rare_label(counts[label.as_str()], n, params) {
                detail[row] += 1;
            }
        }
    }
    let flags = detail.iter().map(|&d| d > 0).collect();
    Ok(ScoreVector {
        detector_id: "type2".into(),
        case_ids: dataset.case_ids().to_vec(),
        scores,
        flags: Some(flags),
        detail: Some(detail),
        params: Some(params.clone()),
    })
}

/// Type III detector: flagged only when both the extreme-value and rare-class
/// detectors flag the case. The score adds both scores, each divided by its
/// own cutoff (`k_extreme` and `-ln(tau_rare)`).
pub fn detect_simple_mixed(dataset: &Dataset, params: &DetectorParams) -> Result<ScoreVector, DetectorError> {
    let schema = dataset.schema();
    require_attributes(schema.continuous_indices().len(), 1, "continuous")?;
    require_attributes(schema.categorical_indices().len(), 1, "categorical")?;
    let extreme = detect_extreme_value(dataset, params)?;
    let rare = detect_rare_class(dataset, params)?;
    let rare_unit = (1.0 / params.tau_rare).ln();
    let scores = extreme
        .scores
        .iter()
        .zip(&rare.scores)
        .map(|(e, r)| e / params.k_extreme + r / rare_unit)
        .collect();
    let flags = extreme
        .flags
        .as_ref()
        .unwrap()
        .iter()
        .zip(rare.flags.as_ref().unwrap())
        .map(|(a, b)| *a && *b)
        .collect();
    Ok(ScoreVector {
        detector_id: "type3".into(),
        case_ids: dataset.case_ids().to_vec(),
        scores,
        flags: Some(flags),
        detail: None,
        params: Some(params.clone()),
    })
}
