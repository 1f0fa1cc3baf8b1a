//! Reference detectors, one per anomaly type, producing a [`ScoreVector`]
//! (higher = more anomalous) plus binary flags under explicit thresholds.

pub mod combos;
pub mod knn;
pub(crate) mod multivariate;
mod scores;
pub mod univariate;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Dataset, ScaleMethod};

pub use multivariate::{
    detect_multidim_mixed, detect_multidim_numerical, detect_multidim_rare_class, local_rarity,
    LocalRarity,
};
pub use scores::{ScoreError, ScoreVector};
pub use univariate::{detect_extreme_value, detect_rare_class, detect_simple_mixed, is_rare_label};

/// Upper bound for any score; zero-scale deviations saturate here.
pub const SATURATED_SCORE: f64 = 1e12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distance {
    #[default]
    Euclidean,
}

/// Thresholds shared by the detectors and the case classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorParams {
    /// Extreme-value cutoff in units of scale.
    pub k_extreme: f64,
    pub method: ScaleMethod,
    /// Compute center and scale without the evaluated case (extreme-value detector).
    pub leave_one_out: bool,
    /// A label (or tuple) with relative frequency at or below this is rare.
    pub tau_rare: f64,
    /// A label (or tuple) with count at or below this is rare.
    pub c_rare: usize,
    pub k_nn: usize,
    pub distance: Distance,
    /// Robust-standardize continuous attributes before distance computation.
    pub standardize: bool,
    /// Joint-density flags go to scores above the `1 - epsilon` quantile.
    pub epsilon: f64,
    /// Largest attribute subset examined for class combinations.
    pub combo_order: usize,
    /// Minimum global frequency of a class for local rarity to count.
    pub g_min: f64,
    /// Maximum neighborhood frequency for a class to be locally rare.
    pub l_max: f64,
    /// Equal-width bins for the mid-range density check; 0 disables it.
    pub bins: usize,
}

impl Default for DetectorParams {
    fn default() -> Self {
        DetectorParams {
            k_extreme: 3.0,
            method: ScaleMethod::Robust,
            leave_one_out: false,
            tau_rare: 0.01,
            c_rare: 1,
            k_nn: 10,
            distance: Distance::Euclidean,
            standardize: true,
            epsilon: 0.02,
            combo_order: 2,
            g_min: 0.05,
            l_max: 0.1,
            bins: 0,
        }
    }
}

impl DetectorParams {
    pub fn validate(&self) -> Result<(), DetectorError> {
        let bad = |msg: String| Err(DetectorError::InvalidParams(msg));
        if !(self.k_extreme.is_finite() && self.k_extreme > 0.0) {
            return bad(format!("k_extreme must be > 0, got {}", self.k_extreme));
        }
        if !(self.tau_rare > 0.0 && self.tau_rare < 1.0) {
            return bad(format!("tau_rare must lie in (0, 1), got {}", self.tau_rare));
        }
        if self.k_nn == 0 {
            return bad("k_nn must be >= 1".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        if self.combo_order < 2 {
            return bad(format!("combo_order must be >= 2, got {}", self.combo_order));
        }
        if !(0.0..=1.0).contains(&self.g_min) {
            return bad(format!("g_min must lie in [0, 1], got {}", self.g_min));
        }
        if !(0.0..1.0).contains(&self.l_max) {
            return bad(format!("l_max must lie in [0, 1), got {}", self.l_max));
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum DetectorError {
    #[error("unknown detector {id:?}; registered detectors: {}", known.join(", "))]
    UnknownDetector { id: String, known: Vec<String> },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("detector needs at least {need} {kind} attribute(s), dataset has {have}")]
    TooFewAttributes { kind: &'static str, need: usize, have: usize },
    #[error("detector needs at least {need} cases, dataset has {have}")]
    TooFewCases { need: usize, have: usize },
    #[error("k_nn = {k} requires more than {k} cases, dataset has {n}")]
    NeighborsExceedCases { k: usize, n: usize },
    #[error("combo_order {order} exceeds the {available} categorical attributes")]
    ComboOrderTooLarge { order: usize, available: usize },
}

/// Registered detector ids, in type order.
pub const DETECTOR_IDS: [&str; 6] = ["type1", "type2", "type3", "type4", "type5", "type6"];

pub fn run_detector(id: &str, dataset: &Dataset, params: &DetectorParams) -> Result<ScoreVector, DetectorError> {
    let run = match id {
        "type1" => detect_extreme_value,
        "type2" => detect_rare_class,
        "type3" => detect_simple_mixed,
        "type4" => detect_multidim_numerical,
        "type5" => detect_multidim_rare_class,
        "type6" => detect_multidim_mixed,
        _ => {
            return Err(DetectorError::UnknownDetector {
                id: id.to_string(),
                known: DETECTOR_IDS.iter().map(|s| s.to_string()).collect(),
            })
        }
    };
    run(dataset, params)
}

pub(crate) fn require_attributes(
    have: usize,
    need: usize,
    kind: &'static str,
) -> Result<(), DetectorError> {
    if have < need {
        Err(DetectorError::TooFewAttributes { kind, need, have })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validation() {
        assert!(DetectorParams::default().validate().is_ok());
        let bad = DetectorParams { tau_rare: 1.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = DetectorParams { k_extreme: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = DetectorParams { k_nn: 0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn params_json_uses_field_names() {
        let p: DetectorParams = serde_json::from_str(r#"{"k_nn": 4, "method": "sd"}"#).unwrap();
        assert_eq!(p.k_nn, 4);
        assert_eq!(p.method, ScaleMethod::ZScore);
        assert_eq!(p.k_extreme, 3.0);
        assert!(serde_json::from_str::<DetectorParams>(r#"{"knn": 4}"#).is_err());
    }
}
