use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{aligned_scores, metrics_for, truth_types, TypeMetrics};
use super::EvalError;
use crate::data::Dataset;
use crate::detectors::{run_detector, DetectorParams, ScoreVector};
use crate::inject::GroundTruth;
use crate::numfmt::{format_sig, round_sig};
use crate::taxonomy::AnomalyType;

/// Metrics of one detector on one anomaly type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub detector_id: String,
    #[serde(flatten)]
    pub metrics: TypeMetrics,
}

/// Metrics of one detector with all ground-truth anomalies as positives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverallRow {
    pub detector_id: String,
    pub anomalies: usize,
    pub rank_auc: f64,
    pub recall_at_k: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precision: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recall: Option<f64>,
}

/// Detector × type matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub benchmark: String,
    pub rows: Vec<ReportRow>,
    pub overall: Vec<OverallRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<DetectorParams>,
}

fn round_metrics(mut m: TypeMetrics) -> TypeMetrics {
    m.rank_auc = round_sig(m.rank_auc);
    m.recall_at_k = round_sig(m.recall_at_k);
    m.precision = m.precision.map(round_sig);
    m.recall = m.recall.map(round_sig);
    m
}

/// Metric names in report order.
pub const METRICS: [&str; 4] = ["rank_auc", "recall_at_k", "precision", "recall"];

impl EvaluationReport {
    pub fn new(benchmark: impl Into<String>, params: Option<DetectorParams>) -> Self {
        EvaluationReport { benchmark: benchmark.into(), rows: Vec::new(), overall: Vec::new(), params }
    }

    /// Adds the rows of one score vector.
    pub fn add(&mut self, scores: &ScoreVector, truth: &GroundTruth, dataset: &Dataset) -> Result<(), EvalError> {
        let (rows, overall) = evaluate_detector(scores, truth, dataset)?;
        self.rows.extend(rows);
        self.overall.push(overall);
        Ok(())
    }

    pub fn detectors(&self) -> Vec<&str> {
        self.overall.iter().map(|o| o.detector_id.as_str()).collect()
    }

    pub fn get(&self, detector_id: &str, anomaly: AnomalyType) -> Option<&TypeMetrics> {
        self.rows.iter().find(|r| r.detector_id == detector_id && r.metrics.anomaly == anomaly).map(|r| &r.metrics)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<EvaluationReport, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Flat `detector,type,metric,value` CSV; overall rows use type `all`.
    /// Metrics that are undefined (no flags) are omitted.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("detector,type,metric,value\n");
        let mut line = |detector: &str, t: &str, metric: &str, value: Option<f64>| {
            if let Some(v) = value {
                let _ = writeln!(out, "{detector},{t},{metric},{}", format_sig(v));
            }
        };
        for r in &self.rows {
            let m = &r.metrics;
            let values = [Some(m.rank_auc), Some(m.recall_at_k), m.precision, m.recall];
            for (name, v) in METRICS.iter().zip(values) {
                line(&r.detector_id, m.anomaly.roman(), name, v);
            }
        }
        for o in &self.overall {
            let values = [Some(o.rank_auc), Some(o.recall_at_k), o.precision, o.recall];
            for (name, v) in METRICS.iter().zip(values) {
                line(&o.detector_id, "all", name, v);
            }
        }
        out
    }

    /// Fixed-width detector × type table of one metric. Cells without a
    /// value show `-`.
    pub fn table(&self, metric: &str) -> Result<String, EvalError> {
        if !METRICS.contains(&metric) {
            return Err(EvalError::UnknownMetric(metric.to_string()));
        }
        let pick = |m: &TypeMetrics| match metric {
            "rank_auc" => Some(m.rank_auc),
            "recall_at_k" => Some(m.recall_at_k),
            "precision" => m.precision,
            _ => m.recall,
        };
        let pick_overall = |o: &OverallRow| match metric {
            "rank_auc" => Some(o.rank_auc),
            "recall_at_k" => Some(o.recall_at_k),
            "precision" => o.precision,
            _ => o.recall,
        };
        let types: Vec<AnomalyType> =
            AnomalyType::ALL.into_iter().filter(|t| self.rows.iter().any(|r| r.metrics.anomaly == *t)).collect();
        let width = self.detectors().iter().map(|d| d.len()).max().unwrap_or(0).max("detector".len());
        let cell = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"));
        let mut out = format!("{metric}\n{:<width$}", "detector");
        for t in &types {
            let _ = write!(out, " {:>7}", t.roman());
        }
        let _ = writeln!(out, " {:>7}", "all");
        for o in &self.overall {
            let _ = write!(out, "{:<width$}", o.detector_id);
            for t in &types {
                let _ = write!(out, " {:>7}", cell(self.get(&o.detector_id, *t).and_then(pick)));
            }
            let _ = writeln!(out, " {:>7}", cell(pick_overall(o)));
        }
        Ok(out)
    }
}

/// Per-type rows and the overall row for one score vector.
pub fn evaluate_detector(
    scores: &ScoreVector,
    truth: &GroundTruth,
    dataset: &Dataset,
) -> Result<(Vec<ReportRow>, OverallRow), EvalError> {
    let (aligned, flags) = aligned_scores(scores, dataset)?;
    let types = truth_types(truth, dataset)?;
    let ids = dataset.case_ids();
    let row_type: Vec<Option<AnomalyType>> = ids.iter().map(|id| types.get(id).copied()).collect();
    let rows = AnomalyType::ALL
        .iter()
        .filter(|t| truth.count(**t) > 0)
        .map(|&t| ReportRow {
            detector_id: scores.detector_id.clone(),
            metrics: round_metrics(metrics_for(
                t,
                ids,
                &aligned,
                flags.as_deref(),
                |r| row_type[r] == Some(t),
                |r| row_type[r].is_none(),
            )),
        })
        .collect();
    // the type field is a placeholder here; only the numbers are kept
    let all = round_metrics(metrics_for(
        AnomalyType::ExtremeValue,
        ids,
        &aligned,
        flags.as_deref(),
        |r| row_type[r].is_some(),
        |r| row_type[r].is_none(),
    ));
    let overall = OverallRow {
        detector_id: scores.detector_id.clone(),
        anomalies: all.anomalies,
        rank_auc: all.rank_auc,
        recall_at_k: all.recall_at_k,
        precision: all.precision,
        recall: all.recall,
    };
    Ok((rows, overall))
}

/// Runs each detector on the benchmark and evaluates it per type. Detectors
/// run in parallel; rows keep the order of `detector_ids`.
pub fn cross_matrix(
    detector_ids: &[&str],
    benchmark: (&Dataset, &GroundTruth),
    params: &DetectorParams,
    name: &str,
) -> Result<EvaluationReport, EvalError> {
    let (dataset, truth) = benchmark;
    let results: Vec<Result<(Vec<ReportRow>, OverallRow), EvalError>> = detector_ids
        .par_iter()
        .map(|id| {
            let scores = run_detector(id, dataset, params)?;
            evaluate_detector(&scores, truth, dataset)
        })
        .collect();
    let mut report = EvaluationReport::new(name, Some(params.clone()));
    for r in results {
        let (rows, overall) = r?;
        report.rows.extend(rows);
        report.overall.push(overall);
    }
    Ok(report)
}

/// Reads a `case_id,score` CSV for the cases of `dataset`. Flags are read
/// when a `flag` column is present.
pub fn load_external_scores<R: std::io::Read>(source: R, dataset: &Dataset) -> Result<ScoreVector, EvalError> {
    Ok(ScoreVector::read_csv(source, "external", dataset.case_ids())?)
}
