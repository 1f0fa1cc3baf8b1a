use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::InjectError;
use crate::data::{Attribute, CaseId, Column, Dataset, Schema};
use crate::numfmt::round_sig;

/// One Gaussian component of the continuous mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSpec {
    pub weight: f64,
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

/// How labels of a categorical attribute are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelDistribution {
    Fixed { labels: Vec<String>, weights: Vec<f64> },
    /// One weight row per cluster.
    ByCluster { labels: Vec<String>, weights: Vec<Vec<f64>> },
    /// Weights conditional on the label of an earlier categorical attribute.
    ByAttribute { parent: String, labels: Vec<String>, table: BTreeMap<String, Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalSpec {
    pub name: String,
    #[serde(flatten)]
    pub distribution: LabelDistribution,
}

/// Simulated base dataset: a Gaussian mixture over the continuous attributes
/// and (optionally cluster- or parent-conditional) label distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseSpec {
    pub n_cases: usize,
    pub seed: u64,
    #[serde(default)]
    pub continuous: Vec<String>,
    #[serde(default)]
    pub clusters: Vec<ClusterSpec>,
    #[serde(default)]
    pub categorical: Vec<CategoricalSpec>,
}

fn check_weights(what: &str, weights: &[f64], len: usize) -> Result<(), InjectError> {
    if weights.len() != len {
        return Err(InjectError::InvalidSpec(format!("{what}: {} weights for {len} entries", weights.len())));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(InjectError::InvalidSpec(format!("{what}: weights must be finite and non-negative")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(InjectError::InvalidSpec(format!("{what}: weights sum to {total}, not 1")));
    }
    Ok(())
}

impl BaseSpec {
    pub fn validate(&self) -> Result<(), InjectError> {
        let bad = |msg: String| Err(InjectError::InvalidSpec(msg));
        let d = self.continuous.len();
        if self.clusters.is_empty() {
            return bad("at least one cluster is required".into());
        }
        if self.clusters.iter().any(|c| c.weight.is_nan() || c.weight <= 0.0) {
            return bad("cluster weights must be positive".into());
        }
        let weights: Vec<f64> = self.clusters.iter().map(|c| c.weight).collect();
        check_weights("clusters", &weights, self.clusters.len())?;
        for (i, c) in self.clusters.iter().enumerate() {
            if c.means.len() != d || c.scales.len() != d {
                return bad(format!("cluster {i}: needs {d} means and scales"));
            }
            if c.means.iter().any(|m| !m.is_finite()) || c.scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
                return bad(format!("cluster {i}: means must be finite and scales positive"));
            }
        }
        let mut seen: Vec<&CategoricalSpec> = Vec::new();
        for cat in &self.categorical {
            let name = &cat.name;
            match &cat.distribution {
                LabelDistribution::Fixed { labels, weights } => check_weights(name, weights, labels.len())?,
                LabelDistribution::ByCluster { labels, weights } => {
                    if weights.len() != self.clusters.len() {
                        return bad(format!("{name}: needs one weight row per cluster"));
                    }
                    for row in weights {
                        check_weights(name, row, labels.len())?;
                    }
                }
                LabelDistribution::ByAttribute { parent, labels, table } => {
                    let Some(p) = seen.iter().find(|s| &s.name == parent) else {
                        return bad(format!("{name}: parent {parent:?} must be an earlier categorical attribute"));
                    };
                    for label in p.distribution.labels() {
                        let row = table
                            .get(label)
                            .ok_or_else(|| InjectError::InvalidSpec(format!("{name}: no weights for {parent}={label}")))?;
                        check_weights(name, row, labels.len())?;
                    }
                }
            }
            if cat.distribution.labels().iter().any(String::is_empty) {
                return bad(format!("{name}: labels must be non-empty"));
            }
            seen.push(cat);
        }
        self.schema().map(|_| ())
    }

    /// Continuous attributes first, then categorical ones, in spec order.
    pub fn schema(&self) -> Result<Schema, InjectError> {
        let mut attributes: Vec<Attribute> = self.continuous.iter().map(Attribute::continuous).collect();
        attributes.extend(self.categorical.iter().map(|c| Attribute::categorical(&c.name)));
        Ok(Schema::new(attributes, None)?)
    }
}

impl LabelDistribution {
    pub fn labels(&self) -> &[String] {
        match self {
            LabelDistribution::Fixed { labels, .. }
            | LabelDistribution::ByCluster { labels, .. }
            | LabelDistribution::ByAttribute { labels, .. } => labels,
        }
    }
}

fn draw(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    WeightedIndex::new(weights).expect("validated weights").sample(rng)
}

/// Deterministic base dataset for `spec`. Continuous values are kept to 12
/// significant digits.
pub fn generate_base(spec: &BaseSpec) -> Result<Dataset, InjectError> {
    spec.validate()?;
    let schema = spec.schema()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let cluster_weights: Vec<f64> = spec.clusters.iter().map(|c| c.weight).collect();
    let cluster_index = WeightedIndex::new(&cluster_weights).expect("validated weights");
    let d = spec.continuous.len();
    let mut continuous = vec![Vec::with_capacity(spec.n_cases); d];
    let mut categorical = vec![Vec::with_capacity(spec.n_cases); spec.categorical.len()];
    for _ in 0..spec.n_cases {
        let k = cluster_index.sample(&mut rng);
        let cluster = &spec.clusters[k];
        for (j, column) in continuous.iter_mut().enumerate() {
            let z: f64 = rng.sample(StandardNormal);
            column.push(round_sig(cluster.means[j] + cluster.scales[j] * z));
        }
        let mut chosen: Vec<usize> = Vec::with_capacity(spec.categorical.len());
        for (j, cat) in spec.categorical.iter().enumerate() {
            let pick = match &cat.distribution {
                LabelDistribution::Fixed { weights, .. } => draw(&mut rng, weights),
                LabelDistribution::ByCluster { weights, .. } => draw(&mut rng, &weights[k]),
                LabelDistribution::ByAttribute { parent, table, .. } => {
                    let p = spec.categorical.iter().position(|c| &c.name == parent).expect("validated parent");
                    let parent_label = &spec.categorical[p].distribution.labels()[chosen[p]];
                    draw(&mut rng, &table[parent_label])
                }
            };
            chosen.push(pick);
            categorical[j].push(cat.distribution.labels()[pick].clone());
        }
    }
    let columns = continuous
        .into_iter()
        .map(Column::Continuous)
        .chain(categorical.into_iter().map(Column::Categorical))
        .collect();
    let ids = (0..spec.n_cases as u64).map(CaseId).collect();
    Ok(Dataset::new(schema, ids, columns)?)
}
