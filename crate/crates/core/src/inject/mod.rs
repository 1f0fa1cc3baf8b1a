//! Simulated base datasets and ground-truth-labeled anomaly injection.
//!
//! Injected cases are appended; base cases are never modified. Candidates
//! are generated per type and accepted only when the classifier, using the
//! base as reference and the injection thresholds, assigns the intended
//! type. Randomness comes from ChaCha8 seeded with the spec seed, with one
//! stream per anomaly type.

mod base;
mod place;

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use base::{generate_base, BaseSpec, CategoricalSpec, ClusterSpec, LabelDistribution};

use crate::data::{CaseId, DataError, Dataset};
use crate::detectors::DetectorParams;
use crate::taxonomy::{AnomalyType, Profile, TaxonomyError};

#[derive(Debug, Error)]
pub enum InjectError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("type {anomaly} needs {needs}")]
    MissingKinds { anomaly: AnomalyType, needs: String },
    #[error("type {anomaly}: gave up after {attempts} attempts: {constraint}")]
    Infeasible { anomaly: AnomalyType, constraint: String, attempts: usize },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremeMode {
    /// Beyond center ± m·scale.
    #[default]
    Tail,
    /// Inside an empty equal-width bin between occupied ones.
    MidRange,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RarityMode {
    /// A label not yet present (`anom_<j>`).
    #[default]
    NewLabel,
    /// An existing label that stays rare after one more use.
    Reuse,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TupleRule {
    #[default]
    Random,
    Lexicographic,
}

/// Per-type knobs for injection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InjectionSpec {
    /// Number of cases to inject per type.
    pub counts: BTreeMap<AnomalyType, usize>,
    /// Types I/III: values land between `m` and `1.5·m` scales from the center.
    pub extremity: f64,
    /// Types I/III: number of continuous attributes pushed out.
    pub extreme_attributes: usize,
    pub extreme_mode: ExtremeMode,
    pub rarity_mode: RarityMode,
    /// Type IV: marginal quantile band `[q_lo, q_hi]` for every coordinate.
    pub band: [f64; 2],
    /// Type IV: kNN score must exceed the `1 - density_epsilon` quantile of base scores.
    pub density_epsilon: f64,
    pub tuple_rule: TupleRule,
    /// Type VI: number of replaced classes.
    pub vi_order: usize,
    /// Detection thresholds the injected cases must satisfy.
    pub thresholds: DetectorParams,
    pub retry_budget: usize,
    pub seed: u64,
}

impl Default for InjectionSpec {
    fn default() -> Self {
        InjectionSpec {
            counts: BTreeMap::new(),
            extremity: 6.0,
            extreme_attributes: 1,
            extreme_mode: ExtremeMode::Tail,
            rarity_mode: RarityMode::NewLabel,
            band: [0.05, 0.95],
            density_epsilon: 0.005,
            tuple_rule: TupleRule::Random,
            vi_order: 1,
            thresholds: DetectorParams::default(),
            retry_budget: 10_000,
            seed: 0,
        }
    }
}

impl InjectionSpec {
    pub fn count(&self, t: AnomalyType) -> usize {
        self.counts.get(&t).copied().unwrap_or(0)
    }

    /// Same count for every type.
    pub fn with_uniform_counts(mut self, count: usize) -> Self {
        self.counts = AnomalyType::ALL.into_iter().map(|t| (t, count)).collect();
        self
    }

    pub fn validate(&self) -> Result<(), InjectError> {
        let bad = |msg: String| Err(InjectError::InvalidSpec(msg));
        let [lo, hi] = self.band;
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return bad(format!("band must satisfy 0 <= q_lo < q_hi <= 1, got [{lo}, {hi}]"));
        }
        if !(self.extremity.is_finite() && self.extremity > 0.0) {
            return bad(format!("extremity must be > 0, got {}", self.extremity));
        }
        if self.extreme_attributes == 0 {
            return bad("extreme_attributes must be >= 1".into());
        }
        if !(self.density_epsilon > 0.0 && self.density_epsilon < 1.0) {
            return bad(format!("density_epsilon must lie in (0, 1), got {}", self.density_epsilon));
        }
        if self.vi_order == 0 {
            return bad("vi_order must be >= 1".into());
        }
        self.thresholds.validate().map_err(|e| InjectError::InvalidSpec(e.to_string()))
    }
}

/// One injected case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthEntry {
    pub case_id: CaseId,
    #[serde(rename = "type")]
    pub anomaly: AnomalyType,
    pub attributes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<u32>,
    #[serde(default)]
    pub params: serde_json::Value,
}

/// Injected-anomaly labels of a dataset, with the thresholds they were
/// constructed against.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<DetectorParams>,
    pub entries: Vec<TruthEntry>,
}

impl GroundTruth {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn type_of(&self, id: CaseId) -> Option<AnomalyType> {
        self.entries.iter().find(|e| e.case_id == id).map(|e| e.anomaly)
    }

    pub fn types(&self) -> HashMap<CaseId, AnomalyType> {
        self.entries.iter().map(|e| (e.case_id, e.anomaly)).collect()
    }

    pub fn count(&self, t: AnomalyType) -> usize {
        self.entries.iter().filter(|e| e.anomaly == t).count()
    }

    pub fn of_type(&self, t: AnomalyType) -> impl Iterator<Item = &TruthEntry> {
        self.entries.iter().filter(move |e| e.anomaly == t)
    }

    /// Entry ids are distinct and all present in `dataset`.
    pub fn check_against(&self, dataset: &Dataset) -> Result<(), InjectError> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.case_id) {
                return Err(InjectError::InvalidSpec(format!("case id {} appears twice in the ground truth", e.case_id)));
            }
            if dataset.position(e.case_id).is_none() {
                return Err(InjectError::InvalidSpec(format!("ground-truth case id {} is not in the dataset", e.case_id)));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ground truth serializes")
    }

    pub fn from_json(text: &str) -> Result<GroundTruth, serde_json::Error> {
        serde_json::from_str(text)
    }
}

fn append(
    current: &Dataset,
    anomaly: AnomalyType,
    placements: Vec<place::Placement>,
    truth: &mut GroundTruth,
) -> Result<Dataset, InjectError> {
    let first = current.next_case_id().0;
    let ids: Vec<CaseId> = (0..placements.len() as u64).map(|j| CaseId(first + j)).collect();
    let mut rows = Vec::with_capacity(placements.len());
    for (p, &id) in placements.into_iter().zip(&ids) {
        truth.entries.push(TruthEntry { case_id: id, anomaly, attributes: p.attributes, order: p.order, params: p.params });
        rows.push(p.row);
    }
    Ok(current.append(&ids, rows)?)
}

/// Appends `spec.count(anomaly)` cases of one type to `dataset`.
pub fn inject(
    dataset: &Dataset,
    anomaly: AnomalyType,
    spec: &InjectionSpec,
    seed: u64,
) -> Result<(Dataset, GroundTruth), InjectError> {
    spec.validate()?;
    let profile = Profile::new(dataset, &spec.thresholds)?;
    let placements = place::place(&profile, dataset, anomaly, spec, seed)?;
    let mut truth = GroundTruth { thresholds: Some(spec.thresholds.clone()), entries: Vec::new() };
    let out = append(dataset, anomaly, placements, &mut truth)?;
    Ok((out, truth))
}

/// Injects every type with a non-zero count in order I..VI, each judged
/// against `dataset` as it was before any injection.
pub fn inject_all(dataset: &Dataset, inj: &InjectionSpec) -> Result<(Dataset, GroundTruth), InjectError> {
    inj.validate()?;
    let mut truth = GroundTruth { thresholds: Some(inj.thresholds.clone()), entries: Vec::new() };
    if AnomalyType::ALL.iter().all(|&t| inj.count(t) == 0) {
        return Ok((dataset.clone(), truth));
    }
    let profile = Profile::new(dataset, &inj.thresholds)?;
    let mut current = dataset.clone();
    for t in AnomalyType::ALL {
        let placements = place::place(&profile, &current, t, inj, inj.seed)?;
        if !placements.is_empty() {
            current = append(&current, t, placements, &mut truth)?;
        }
    }
    Ok((current, truth))
}

/// Generates the base and injects every type in order I..VI.
pub fn build_benchmark(base: &BaseSpec, inj: &InjectionSpec) -> Result<(Dataset, GroundTruth), InjectError> {
    inject_all(&generate_base(base)?, inj)
}

/// The reference benchmark: 2000 cases in two Gaussian clusters over
/// `x, y, z`, with cluster-bound colors, sex-dependent status and
/// region-bound depots, plus `count` injected cases per type.
pub fn reference_specs(count: usize, seed: u64) -> (BaseSpec, InjectionSpec) {
    let strings = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let regions = ["r1", "r2", "r3", "r4"];
    let depots = ["d1", "d2", "d3", "d4"];
    let depot_table = regions
        .iter()
        .enumerate()
        .map(|(i, r)| (r.to_string(), (0..4).map(|j| if i == j { 1.0 } else { 0.0 }).collect()))
        .collect();
    let base = BaseSpec {
        n_cases: 2000,
        seed,
        continuous: strings(&["x", "y", "z"]),
        clusters: vec![
            ClusterSpec { weight: 0.5, means: vec![-3.0; 3], scales: vec![1.0; 3] },
            ClusterSpec { weight: 0.5, means: vec![3.0; 3], scales: vec![1.0; 3] },
        ],
        categorical: vec![
            CategoricalSpec {
                name: "color".into(),
                distribution: LabelDistribution::ByCluster {
                    labels: strings(&["blue", "pink"]),
                    weights: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                },
            },
            CategoricalSpec {
                name: "sex".into(),
                distribution: LabelDistribution::Fixed { labels: strings(&["female", "male"]), weights: vec![0.5, 0.5] },
            },
            CategoricalSpec {
                name: "status".into(),
                distribution: LabelDistribution::ByAttribute {
                    parent: "sex".into(),
                    labels: strings(&["pregnant", "not_pregnant"]),
                    table: [("female".to_string(), vec![0.5, 0.5]), ("male".to_string(), vec![0.0, 1.0])].into(),
                },
            },
            CategoricalSpec {
                name: "region".into(),
                distribution: LabelDistribution::Fixed { labels: strings(&regions), weights: vec![0.25; 4] },
            },
            CategoricalSpec {
                name: "depot".into(),
                distribution: LabelDistribution::ByAttribute {
                    parent: "region".into(),
                    labels: strings(&depots),
                    table: depot_table,
                },
            },
        ],
    };
    let thresholds = DetectorParams { k_nn: 20, l_max: 0.05, g_min: 0.3, ..Default::default() };
    let inj = InjectionSpec { thresholds, seed: seed.wrapping_add(1), ..Default::default() }.with_uniform_counts(count);
    (base, inj)
}
