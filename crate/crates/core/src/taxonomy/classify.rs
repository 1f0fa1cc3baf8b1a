//! Assigns a single anomaly type to a case by running the univariate checks
//! first and the multivariate checks only when no univariate check fires.
//!
//! The same reference [`Profile`] also judges cases that are not (yet) part
//! of the dataset, which the injector uses to accept candidates.

use serde::{Deserialize, Serialize};

use super::{AnomalyType, TaxonomyError};
use crate::data::{CaseId, ColumnScale, Dataset, Value};
use crate::detectors::combos::TupleTable;
use crate::detectors::knn::{mean_distance, transform, upper_quantile, Neighbor, PointSet};
use crate::detectors::univariate::{deviation, is_rare_label, remove_sorted, Histogram};
use crate::detectors::{local_rarity, DetectorParams};
use crate::numfmt::round_sig;

/// One check that fired for a case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub attributes: Vec<String>,
    pub check: String,
    pub score: f64,
    pub threshold: f64,
}

impl Evidence {
    fn new(attributes: Vec<String>, check: &str, score: f64, threshold: f64) -> Evidence {
        Evidence { attributes, check: check.to_string(), score, threshold }
    }

    fn rounded(mut self) -> Evidence {
        self.score = round_sig(self.score);
        self.threshold = round_sig(self.threshold);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeAttribution {
    pub case_id: CaseId,
    #[serde(rename = "type", with = "type_or_none")]
    pub primary_type: Option<AnomalyType>,
    /// Size of the smallest locally rare class combination (Type VI only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<u32>,
    pub evidence: Vec<Evidence>,
    /// Further types whose checks also fired (multi-label mode only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub also: Vec<AnomalyType>,
}

mod type_or_none {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::taxonomy::AnomalyType;

    pub fn serialize<S: Serializer>(t: &Option<AnomalyType>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(t.map_or("none", |t| t.roman()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<AnomalyType>, D::Error> {
        let text = String::deserialize(d)?;
        if text == "none" {
            return Ok(None);
        }
        text.parse().map(Some).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassificationParams {
    #[serde(flatten)]
    pub thresholds: DetectorParams,
    /// Also report every other type whose checks fired.
    pub multi_label: bool,
}

/// Outcome of every check for one case.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assessment {
    /// Univariate continuous checks that fired.
    pub continuous: Vec<Evidence>,
    /// Univariate categorical checks that fired.
    pub categorical: Vec<Evidence>,
    /// Joint-density score of the case, when a neighborhood is available.
    pub knn_score: Option<f64>,
    pub joint_density: Option<Evidence>,
    /// Rare class combinations with their subset size.
    pub combinations: Vec<(u32, Evidence)>,
    /// Locally rare classes or class tuples with their subset size.
    pub local: Vec<(u32, Evidence)>,
}

impl Assessment {
    fn min_order(items: &[(u32, Evidence)]) -> Option<u32> {
        items.iter().map(|(o, _)| *o).min()
    }

    /// Primary type and order under the fixed precedence.
    pub fn primary(&self) -> (Option<AnomalyType>, Option<u32>) {
        let cont = !self.continuous.is_empty();
        let cat = !self.categorical.is_empty();
        let iv = self.joint_density.is_some();
        let v = !self.combinations.is_empty();
        match (cont, cat) {
            (true, true) => return (Some(AnomalyType::SimpleMixed), None),
            (true, false) => return (Some(AnomalyType::ExtremeValue), None),
            (false, true) => return (Some(AnomalyType::RareClass), None),
            (false, false) => {}
        }
        if let Some(order) = Self::min_order(&self.local) {
            (Some(AnomalyType::MultidimMixed), Some(order))
        } else if iv && v {
            (Some(AnomalyType::MultidimMixed), Self::min_order(&self.combinations))
        } else if iv {
            (Some(AnomalyType::MultidimNumerical), None)
        } else if v {
            (Some(AnomalyType::MultidimRareClass), None)
        } else {
            (None, None)
        }
    }

    /// Every type whose defining checks fired, ignoring precedence.
    pub fn all_types(&self) -> Vec<AnomalyType> {
        let cont = !self.continuous.is_empty();
        let cat = !self.categorical.is_empty();
        let mut out = Vec::new();
        if cont && !cat {
            out.push(AnomalyType::ExtremeValue);
        }
        if cat && !cont {
            out.push(AnomalyType::RareClass);
        }
        if cont && cat {
            out.push(AnomalyType::SimpleMixed);
        }
        if self.joint_density.is_some() {
            out.push(AnomalyType::MultidimNumerical);
        }
        if !self.combinations.is_empty() {
            out.push(AnomalyType::MultidimRareClass);
        }
        if !self.local.is_empty() || (self.joint_density.is_some() && !self.combinations.is_empty()) {
            out.push(AnomalyType::MultidimMixed);
        }
        out
    }

    fn evidence_for(&self, t: Option<AnomalyType>) -> Vec<Evidence> {
        let pairs = |items: &[(u32, Evidence)]| items.iter().map(|(_, e)| e.clone()).collect::<Vec<_>>();
        match t {
            None => Vec::new(),
            Some(AnomalyType::ExtremeValue) => self.continuous.clone(),
            Some(AnomalyType::RareClass) => self.categorical.clone(),
            Some(AnomalyType::SimpleMixed) => [self.continuous.clone(), self.categorical.clone()].concat(),
            Some(AnomalyType::MultidimNumerical) => self.joint_density.iter().cloned().collect(),
            Some(AnomalyType::MultidimRareClass) => pairs(&self.combinations),
            Some(AnomalyType::MultidimMixed) => {
                if self.local.is_empty() {
                    let mut all: Vec<Evidence> = self.joint_density.iter().cloned().collect();
                    all.extend(pairs(&self.combinations));
                    all
                } else {
                    pairs(&self.local)
                }
            }
        }
    }

    fn all_evidence(&self) -> Vec<Evidence> {
        let mut all = self.continuous.clone();
        all.extend(self.categorical.iter().cloned());
        all.extend(self.joint_density.iter().cloned());
        all.extend(self.combinations.iter().map(|(_, e)| e.clone()));
        all.extend(self.local.iter().map(|(_, e)| e.clone()));
        all
    }

    /// Evidence values are kept to 12 significant digits.
    pub fn attribution(&self, case_id: CaseId, multi_label: bool) -> TypeAttribution {
        let (primary_type, order) = self.primary();
        let (evidence, also) = if multi_label {
            let also = self.all_types().into_iter().filter(|t| Some(*t) != primary_type).collect();
            let evidence = if primary_type.is_some() { self.all_evidence() } else { Vec::new() };
            (evidence, also)
        } else {
            (self.evidence_for(primary_type), Vec::new())
        };
        let evidence = evidence.into_iter().map(Evidence::rounded).collect();
        TypeAttribution { case_id, primary_type, order, evidence, also }
    }
}

/// Reference statistics of a dataset: scales, label and tuple counts, and the
/// kNN structure over its continuous attributes.
#[derive(Debug, Clone)]
pub struct Profile<'a> {
    pub(crate) dataset: &'a Dataset,
    pub(crate) params: DetectorParams,
    pub(crate) continuous: Vec<usize>,
    pub(crate) scales: Vec<ColumnScale>,
    sorted: Vec<Vec<f64>>,
    histograms: Vec<Option<Histogram>>,
    pub(crate) table: TupleTable<'a>,
    points: Option<PointSet>,
    knn_scales: Vec<ColumnScale>,
    neighbors: Vec<Vec<Neighbor>>,
    pub(crate) knn_scores: Vec<f64>,
    pub(crate) knn_threshold: f64,
}

impl<'a> Profile<'a> {
    pub fn new(dataset: &'a Dataset, params: &DetectorParams) -> Result<Profile<'a>, TaxonomyError> {
        params.validate().map_err(|e| TaxonomyError::InvalidParams(e.to_string()))?;
        let schema = dataset.schema();
        let continuous = schema.continuous_indices();
        let m = schema.categorical_indices().len();
        let mut scales = Vec::new();
        let mut sorted = Vec::new();
        let mut histograms = Vec::new();
        for &a in &continuous {
            let values = dataset.continuous(a);
            let mut s = values.to_vec();
            s.sort_by(f64::total_cmp);
            scales.push(ColumnScale::from_sorted(&s, params.method));
            histograms.push(Histogram::new(values, params.bins));
            sorted.push(s);
        }
        let table = TupleTable::new(dataset, params.combo_order.min(m));
        let (mut points, mut knn_scales, mut neighbors, mut knn_scores, mut knn_threshold) =
            (None, Vec::new(), Vec::new(), Vec::new(), f64::INFINITY);
        if !continuous.is_empty() && dataset.len() > params.k_nn {
            let (ps, sc) = PointSet::from_dataset(dataset, params.standardize);
            neighbors = ps.neighbor_lists(params.k_nn);
            knn_scores = neighbors.iter().map(|nb| mean_distance(nb)).collect();
            knn_threshold = upper_quantile(&knn_scores, params.epsilon);
            points = Some(ps);
            knn_scales = sc;
        }
        Ok(Profile {
            dataset,
            params: params.clone(),
            continuous,
            scales,
            sorted,
            histograms,
            table,
            points,
            knn_scales,
            neighbors,
            knn_scores,
            knn_threshold,
        })
    }

    pub fn dataset(&self) -> &'a Dataset {
        self.dataset
    }

    pub fn params(&self) -> &DetectorParams {
        &self.params
    }

    /// Whether kNN-based checks can run (some continuous attribute and more
    /// than `k_nn` cases).
    pub fn has_neighborhood(&self) -> bool {
        self.points.is_some()
    }

    /// kNN score of every dataset case (empty without a neighborhood).
    pub fn knn_scores(&self) -> &[f64] {
        &self.knn_scores
    }

    /// The `1 - epsilon` quantile of [`Profile::knn_scores`].
    pub fn knn_threshold(&self) -> f64 {
        self.knn_threshold
    }

    fn names(&self, indices: impl IntoIterator<Item = usize>) -> Vec<String> {
        indices.into_iter().map(|i| self.dataset.schema().name(i).to_string()).collect()
    }

    /// Neighbors among the dataset cases of a point given by its continuous
    /// values (in schema order of the continuous attributes).
    pub fn candidate_neighbors(&self, continuous: &[f64]) -> Option<Vec<Neighbor>> {
        let points = self.points.as_ref()?;
        let query: Vec<f64> = continuous
            .iter()
            .zip(&self.knn_scales)
            .map(|(&x, s)| transform(x, s, self.params.standardize))
            .collect();
        Some(points.nearest(&query, self.params.k_nn, None))
    }

    /// Checks a dataset case at row position `row`.
    pub fn assess_row(&self, row: usize) -> Assessment {
        let cont: Vec<f64> = self.continuous.iter().map(|&a| self.dataset.continuous(a)[row]).collect();
        let labels = self.table.row_labels(row);
        let neighbors = self.neighbors.get(row).cloned();
        let knn = self.knn_scores.get(row).copied();
        self.assess(&cont, &labels, neighbors, knn, Some(row))
    }

    /// Checks a case that is not part of the dataset; counts and frequencies
    /// include the candidate itself.
    pub fn assess_candidate(&self, values: &[Value]) -> Assessment {
        let cont: Vec<f64> = self.continuous.iter().map(|&a| values[a].as_num().unwrap_or(f64::NAN)).collect();
        let labels: Vec<&str> = self.table.categorical.iter().map(|&a| values[a].as_label().unwrap_or("")).collect();
        let neighbors = self.candidate_neighbors(&cont);
        let knn = neighbors.as_deref().map(mean_distance);
        self.assess(&cont, &labels, neighbors, knn, None)
    }

    fn assess(
        &self,
        cont: &[f64],
        labels: &[&str],
        neighbors: Option<Vec<Neighbor>>,
        knn: Option<f64>,
        row: Option<usize>,
    ) -> Assessment {
        let p = &self.params;
        let extra = usize::from(row.is_none());
        let n = self.dataset.len() + extra;
        let mut out = Assessment { knn_score: knn, ..Default::default() };

        for (i, &x) in cont.iter().enumerate() {
            let scale = match (row, p.leave_one_out) {
                (Some(_), true) => ColumnScale::from_sorted(&remove_sorted(&self.sorted[i], x), p.method),
                _ => self.scales[i],
            };
            let dev = deviation(x, &scale);
            let density = self.histograms[i].as_ref().and_then(|h| h.density_score(x, extra, p));
            let attrs = self.names([self.continuous[i]]);
            if dev > p.k_extreme {
                out.continuous.push(Evidence::new(attrs, "extreme_value", dev, p.k_extreme));
            } else if let Some(d) = density.filter(|&d| d > p.k_extreme) {
                out.continuous.push(Evidence::new(attrs, "density_rarity", d, p.k_extreme));
            }
        }

        let m = self.table.categorical.len();
        for pos in 0..m {
            let count = self.table.count(pos, labels) + extra;
            if is_rare_label(count, n, p) {
                let attrs = self.names([self.table.categorical[pos]]);
                let freq = count as f64 / n as f64;
                out.categorical.push(if freq <= p.tau_rare {
                    Evidence::new(attrs, "rare_class_frequency", freq, p.tau_rare)
                } else {
                    Evidence::new(attrs, "rare_class_count", count as f64, p.c_rare as f64)
                });
            }
        }

        if let Some(score) = knn.filter(|_| self.continuous.len() >= 2) {
            if score > self.knn_threshold {
                out.joint_density =
                    Some(Evidence::new(self.names(self.continuous.clone()), "joint_density", score, self.knn_threshold));
            }
        }

        if m >= 2 {
            let (_, fired) = crate::detectors::multivariate::combination_rarity(&self.table, labels, extra, p);
            for s in fired {
                let subset = &self.table.subsets[s];
                let count = self.table.count(s, labels) + extra;
                let attrs = self.names(subset.iter().map(|&q| self.table.categorical[q]));
                out.combinations
                    .push((subset.len() as u32, Evidence::new(attrs, "rare_combination", count as f64, p.c_rare as f64)));
            }
        }

        if let Some(nb) = neighbors.filter(|_| m >= 1) {
            let rows: Vec<usize> = nb.iter().map(|x| x.index).collect();
            let lr = local_rarity(&self.table, labels, &rows, extra, p);
            for (s, _global, local) in lr.fired {
                let subset = &self.table.subsets[s];
                let attrs = self.names(subset.iter().map(|&q| self.table.categorical[q]));
                out.local.push((subset.len() as u32, Evidence::new(attrs, "local_class_rarity", local, p.l_max)));
            }
        }
        out
    }
}

/// Classifies cases of one dataset; reference statistics are computed once.
#[derive(Debug, Clone)]
pub struct Classifier<'a> {
    profile: Profile<'a>,
    multi_label: bool,
}

impl<'a> Classifier<'a> {
    pub fn new(dataset: &'a Dataset, params: &ClassificationParams) -> Result<Classifier<'a>, TaxonomyError> {
        Ok(Classifier { profile: Profile::new(dataset, &params.thresholds)?, multi_label: params.multi_label })
    }

    pub fn profile(&self) -> &Profile<'a> {
        &self.profile
    }

    pub fn classify(&self, case_id: CaseId) -> Result<TypeAttribution, TaxonomyError> {
        let row = self.profile.dataset.position(case_id).ok_or(TaxonomyError::UnknownCase(case_id))?;
        Ok(self.profile.assess_row(row).attribution(case_id, self.multi_label))
    }

    /// Attributions of every case, in dataset order.
    pub fn classify_all(&self) -> Vec<TypeAttribution> {
        self.profile
            .dataset
            .case_ids()
            .iter()
            .enumerate()
            .map(|(row, &id)| self.profile.assess_row(row).attribution(id, self.multi_label))
            .collect()
    }
}

pub fn classify_case(
    dataset: &Dataset,
    case_id: CaseId,
    params: &ClassificationParams,
) -> Result<TypeAttribution, TaxonomyError> {
    if dataset.position(case_id).is_none() {
        return Err(TaxonomyError::UnknownCase(case_id));
    }
    Classifier::new(dataset, params)?.classify(case_id)
}
