//! Construction of candidate anomalies for each type. Every candidate is
//! judged against the base profile and kept only when it classifies as the
//! intended type.

use std::collections::{HashMap, HashSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::{ExtremeMode, InjectError, InjectionSpec, RarityMode, TupleRule};
use crate::data::{median_sorted, quantile_sorted, Dataset, Value};
use crate::detectors::combos::subsets;
use crate::detectors::is_rare_label;
use crate::detectors::knn::{mean_distance, upper_quantile};
use crate::detectors::univariate::Histogram;
use crate::numfmt::round_sig;
use crate::taxonomy::{AnomalyType, Profile};

/// One accepted injected case.
#[derive(Debug, Clone)]
pub(crate) struct Placement {
    pub row: Vec<Value>,
    pub attributes: Vec<String>,
    pub order: Option<u32>,
    pub params: serde_json::Value,
}

/// Either a candidate or the reason none could be built on this attempt.
type Attempt = Result<Placement, String>;

struct Placer<'p, 'a> {
    profile: &'p Profile<'a>,
    current: &'p Dataset,
    spec: &'p InjectionSpec,
    rng: ChaCha8Rng,
    dense: Vec<usize>,
    /// Labels introduced by this batch, per schema attribute index.
    batch_labels: HashMap<usize, HashMap<String, usize>>,
    /// Continuous attributes as (schema index, sorted base values).
    sorted: Vec<(usize, Vec<f64>)>,
}

pub(crate) fn place(
    profile: &Profile<'_>,
    current: &Dataset,
    anomaly: AnomalyType,
    spec: &InjectionSpec,
    seed: u64,
) -> Result<Vec<Placement>, InjectError> {
    let count = spec.count(anomaly);
    if count == 0 {
        return Ok(Vec::new());
    }
    check_kinds(profile, anomaly)?;
    let base = profile.dataset();
    if base.is_empty() {
        return Err(InjectError::Infeasible {
            anomaly,
            constraint: "the base dataset is empty".into(),
            attempts: 0,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(anomaly.index() as u64);
    let dense = dense_rows(profile);
    let sorted = base
        .schema()
        .continuous_indices()
        .into_iter()
        .map(|a| {
            let mut v = base.continuous(a).to_vec();
            v.sort_by(f64::total_cmp);
            (a, v)
        })
        .collect();
    let mut placer = Placer { profile, current, spec, rng, dense, batch_labels: HashMap::new(), sorted };
    match anomaly {
        AnomalyType::MultidimRareClass => placer.place_combinations(count),
        _ => placer.place_each(anomaly, count),
    }
}

fn check_kinds(profile: &Profile<'_>, anomaly: AnomalyType) -> Result<(), InjectError> {
    let schema = profile.dataset().schema();
    let cont = schema.continuous_indices().len();
    let cat = schema.categorical_indices().len();
    let missing = |needs: &str| Err(InjectError::MissingKinds { anomaly, needs: needs.to_string() });
    match anomaly {
        AnomalyType::ExtremeValue if cont < 1 => missing("a continuous attribute"),
        AnomalyType::RareClass if cat < 1 => missing("a categorical attribute"),
        AnomalyType::SimpleMixed if cont < 1 || cat < 1 => missing("continuous and categorical attributes"),
        AnomalyType::MultidimNumerical if cont < 2 => missing("two continuous attributes"),
        AnomalyType::MultidimRareClass if cat < 2 => missing("two categorical attributes"),
        AnomalyType::MultidimMixed if cont < 1 || cat < 1 => missing("continuous and categorical attributes"),
        AnomalyType::MultidimNumerical | AnomalyType::MultidimMixed if !profile.has_neighborhood() => {
            Err(InjectError::Infeasible {
                anomaly,
                constraint: format!("the base needs more than k_nn = {} cases", profile.params().k_nn),
                attempts: 0,
            })
        }
        _ => Ok(()),
    }
}

/// Base rows whose kNN score is at most the median (all rows without a
/// neighborhood).
fn dense_rows(profile: &Profile<'_>) -> Vec<usize> {
    let scores = profile.knn_scores();
    if scores.is_empty() {
        return (0..profile.dataset().len()).collect();
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = median_sorted(&sorted);
    (0..scores.len()).filter(|&i| scores[i] <= median).collect()
}

impl Placer<'_, '_> {
    fn base(&self) -> &Dataset {
        self.profile.dataset()
    }

    fn name(&self, index: usize) -> String {
        self.base().schema().name(index).to_string()
    }

    fn clone_dense(&mut self) -> (usize, Vec<Value>) {
        let row = *self.dense.choose(&mut self.rng).expect("non-empty base");
        (row, self.base().row(row))
    }

    fn accepts(&self, anomaly: AnomalyType, p: &Placement) -> bool {
        self.profile.assess_candidate(&p.row).primary() == (Some(anomaly), p.order)
    }

    fn place_each(&mut self, anomaly: AnomalyType, count: usize) -> Result<Vec<Placement>, InjectError> {
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0;
        let mut last = String::from("candidate not classified as the target type");
        while out.len() < count {
            if attempts >= self.spec.retry_budget {
                return Err(InjectError::Infeasible { anomaly, constraint: last, attempts });
            }
            attempts += 1;
            let attempt = match anomaly {
                AnomalyType::ExtremeValue => self.extreme(),
                AnomalyType::RareClass => self.rare(),
                AnomalyType::SimpleMixed => self.simple_mixed(),
                AnomalyType::MultidimNumerical => self.multidim_numerical(),
                AnomalyType::MultidimMixed => self.multidim_mixed(),
                AnomalyType::MultidimRareClass => unreachable!("placed by tuple"),
            };
            match attempt {
                Ok(p) if self.accepts(anomaly, &p) => {
                    self.record_labels(&p.row);
                    out.push(p);
                }
                Ok(_) => last = "candidate not classified as the target type".into(),
                Err(reason) => last = reason,
            }
        }
        Ok(out)
    }

    fn record_labels(&mut self, row: &[Value]) {
        for a in self.base().schema().categorical_indices() {
            if let Some(label) = row[a].as_label() {
                *self.batch_labels.entry(a).or_default().entry(label.to_string()).or_default() += 1;
            }
        }
    }

    /// Count of `label` in the current dataset plus this batch.
    fn current_count(&self, attr: usize, label: &str) -> usize {
        let existing = self.current.categorical(attr).iter().filter(|l| *l == label).count();
        existing + self.batch_labels.get(&attr).and_then(|m| m.get(label)).copied().unwrap_or(0)
    }

    /// Pushes `extreme_attributes` continuous values of `row` out of range.
    fn push_extreme(&mut self, row: &mut [Value]) -> Result<(Vec<String>, serde_json::Value), String> {
        let d = self.sorted.len();
        let k = self.spec.extreme_attributes.min(d);
        let mut picks = rand::seq::index::sample(&mut self.rng, d, k).into_vec();
        picks.sort_unstable();
        let m = self.spec.extremity;
        let mut multipliers = Vec::new();
        let mut names = Vec::new();
        for i in picks {
            let attr = self.sorted[i].0;
            let value = match self.spec.extreme_mode {
                ExtremeMode::Tail => {
                    let scale = self.profile.scales[i];
                    let unit = if scale.scale > 0.0 { scale.scale } else { 1.0 };
                    let sign = if self.rng.random_bool(0.5) { 1.0 } else { -1.0 };
                    let u = self.rng.random_range(m..=1.5 * m);
                    multipliers.push(round_sig(sign * u));
                    scale.center + sign * u * unit
                }
                ExtremeMode::MidRange => {
                    let hist = Histogram::new(&self.sorted[i].1, self.profile.params().bins)
                        .ok_or("mid_range mode needs bins > 0 and a column with spread")?;
                    let empty: Vec<usize> =
                        (0..hist.counts.len()).filter(|&b| hist.counts[b] == 0 && hist.is_mid_range(b)).collect();
                    let bin = *empty.choose(&mut self.rng).ok_or("no empty bin inside the value range")?;
                    hist.bin_center(bin)
                }
            };
            row[attr] = Value::Num(round_sig(value));
            names.push(self.name(attr));
        }
        let mode = match self.spec.extreme_mode {
            ExtremeMode::Tail => json!({ "mode": "tail", "multipliers": multipliers }),
            ExtremeMode::MidRange => json!({ "mode": "mid_range" }),
        };
        Ok((names, mode))
    }

    /// Gives one categorical attribute of `row` a rare label.
    fn put_rare_label(&mut self, row: &mut [Value]) -> Result<(String, serde_json::Value), String> {
        let cats = self.base().schema().categorical_indices();
        let attr = *cats.choose(&mut self.rng).expect("checked kinds");
        let label = match self.spec.rarity_mode {
            RarityMode::NewLabel => {
                let mut j = 0;
                loop {
                    let candidate = format!("anom_{j}");
                    if self.current_count(attr, &candidate) == 0 {
                        break candidate;
                    }
                    j += 1;
                }
            }
            RarityMode::Reuse => {
                let n = self.current.len() + 1;
                let mut labels: Vec<&String> = self.current.categorical(attr).iter().collect();
                labels.sort();
                labels.dedup();
                let feasible: Vec<String> = labels
                    .into_iter()
                    .filter(|l| is_rare_label(self.current_count(attr, l) + 1, n, self.profile.params()))
                    .cloned()
                    .collect();
                feasible.choose(&mut self.rng).cloned().ok_or("no existing label stays rare when reused")?
            }
        };
        row[attr] = Value::Label(label.clone());
        let mode = match self.spec.rarity_mode {
            RarityMode::NewLabel => "new_label",
            RarityMode::Reuse => "reuse",
        };
        Ok((self.name(attr), json!({ "mode": mode, "label": label })))
    }

    fn extreme(&mut self) -> Attempt {
        let (source, mut row) = self.clone_dense();
        let (attributes, detail) = self.push_extreme(&mut row)?;
        let params = json!({ "source_case": self.base().case_ids()[source], "extreme": detail });
        Ok(Placement { row, attributes, order: None, params })
    }

    fn rare(&mut self) -> Attempt {
        let (source, mut row) = self.clone_dense();
        let (attribute, detail) = self.put_rare_label(&mut row)?;
        let params = json!({ "source_case": self.base().case_ids()[source], "rare": detail });
        Ok(Placement { row, attributes: vec![attribute], order: None, params })
    }

    fn simple_mixed(&mut self) -> Attempt {
        let (source, mut row) = self.clone_dense();
        let (mut attributes, extreme) = self.push_extreme(&mut row)?;
        let (attribute, rare) = self.put_rare_label(&mut row)?;
        attributes.push(attribute);
        let params = json!({ "source_case": self.base().case_ids()[source], "extreme": extreme, "rare": rare });
        Ok(Placement { row, attributes, order: None, params })
    }

    fn multidim_numerical(&mut self) -> Attempt {
        let (lo, hi) = (self.spec.band[0], self.spec.band[1]);
        let threshold = upper_quantile(self.profile.knn_scores(), self.spec.density_epsilon);
        let coords: Vec<f64> = self
            .sorted
            .iter()
            .map(|(_, v)| {
                let (a, b) = (quantile_sorted(v, lo), quantile_sorted(v, hi));
                round_sig(if a < b { self.rng.random_range(a..=b) } else { a })
            })
            .collect();
        let neighbors = self.profile.candidate_neighbors(&coords).expect("checked neighborhood");
        let score = mean_distance(&neighbors);
        if score <= threshold {
            return Err("kNN score not above the density threshold".into());
        }
        // categorical values: the most common label tuple among the neighbors
        let table = &self.profile.table;
        let mut tally: HashMap<Vec<&str>, (usize, usize)> = HashMap::new();
        for (pos, nb) in neighbors.iter().enumerate() {
            let entry = tally.entry(table.row_labels(nb.index)).or_insert((0, pos));
            entry.0 += 1;
        }
        let best = tally.into_iter().max_by(|a, b| a.1 .0.cmp(&b.1 .0).then(b.1 .1.cmp(&a.1 .1)));
        let schema = self.base().schema();
        let mut row = Vec::with_capacity(schema.len());
        let (mut c, mut k) = (0, 0);
        for i in 0..schema.len() {
            if schema.kind(i) == crate::data::AttributeKind::Continuous {
                row.push(Value::Num(coords[c]));
                c += 1;
            } else {
                let tuple = &best.as_ref().expect("k_nn >= 1").0;
                row.push(Value::Label(tuple[k].to_string()));
                k += 1;
            }
        }
        let attributes = self.sorted.iter().map(|(a, _)| self.name(*a)).collect();
        let params = json!({ "knn_score": round_sig(score), "threshold": round_sig(threshold), "band": self.spec.band });
        Ok(Placement { row, attributes, order: None, params })
    }

    fn multidim_mixed(&mut self) -> Attempt {
        let order = self.spec.vi_order;
        let (source, mut row) = self.clone_dense();
        let coords: Vec<f64> = self.sorted.iter().map(|(a, _)| row[*a].as_num().expect("continuous")).collect();
        let neighbors = self.profile.candidate_neighbors(&coords).expect("checked neighborhood");
        let table = &self.profile.table;
        let sizes: Vec<usize> = (0..table.subsets.len()).filter(|&s| table.subsets[s].len() == order).collect();
        let &s = sizes.choose(&mut self.rng).ok_or("vi_order exceeds the examined class combinations")?;
        let n = self.base().len() + 1;
        let g_min = self.profile.params().g_min;
        let feasible: Vec<(Vec<&str>, f64)> = table
            .tuples(s)
            .into_iter()
            .map(|(tuple, count)| (tuple, (count + 1) as f64 / n as f64))
            .filter(|(tuple, g)| {
                *g >= g_min
                    && neighbors.iter().all(|nb| {
                        table.subsets[s].iter().zip(tuple).any(|(&p, label)| table.label(p, nb.index) != *label)
                    })
            })
            .collect();
        let (tuple, global) = feasible.choose(&mut self.rng).ok_or("no globally common class absent from the neighborhood")?;
        let mut replaced = Vec::new();
        let mut attributes = Vec::new();
        for (&p, label) in table.subsets[s].iter().zip(tuple) {
            let attr = table.categorical[p];
            replaced.push(row[attr].as_label().unwrap_or_default().to_string());
            row[attr] = Value::Label(label.to_string());
            attributes.push(self.name(attr));
        }
        let params = json!({
            "source_case": self.base().case_ids()[source],
            "replaced": replaced,
            "labels": tuple,
            "global_frequency": round_sig(*global),
            "local_frequency": 0.0,
        });
        Ok(Placement { row, attributes, order: Some(order as u32), params })
    }

    /// Type V: each case receives a distinct label tuple that never occurs
    /// in the data while every label in it is individually common.
    fn place_combinations(&mut self, count: usize) -> Result<Vec<Placement>, InjectError> {
        let anomaly = AnomalyType::MultidimRareClass;
        let mut candidates = self.zero_count_tuples();
        if self.spec.tuple_rule == TupleRule::Random {
            candidates.shuffle(&mut self.rng);
        }
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0;
        let per_tuple = 50;
        for (attrs, tuple) in candidates {
            if out.len() == count {
                break;
            }
            for _ in 0..per_tuple {
                if attempts >= self.spec.retry_budget {
                    return Err(InjectError::Infeasible {
                        anomaly,
                        constraint: "candidate not classified as the target type".into(),
                        attempts,
                    });
                }
                attempts += 1;
                let (source, mut row) = self.clone_dense();
                for (&a, label) in attrs.iter().zip(&tuple) {
                    row[a] = Value::Label(label.clone());
                }
                let p = Placement {
                    row,
                    attributes: attrs.iter().map(|&a| self.name(a)).collect(),
                    order: None,
                    params: json!({ "source_case": self.base().case_ids()[source], "tuple": tuple }),
                };
                if self.accepts(anomaly, &p) {
                    out.push(p);
                    break;
                }
            }
        }
        if out.len() < count {
            return Err(InjectError::Infeasible {
                anomaly,
                constraint: format!("only {} unused zero-count tuples of common labels could be placed", out.len()),
                attempts,
            });
        }
        Ok(out)
    }

    /// Label tuples (attribute indices, labels) over subsets of size
    /// 2..=combo_order with zero count in the current data and only common
    /// labels, in lexicographic order.
    fn zero_count_tuples(&self) -> Vec<(Vec<usize>, Vec<String>)> {
        let base = self.base();
        let params = self.profile.params();
        let cats = base.schema().categorical_indices();
        let n = base.len() + 1;
        let common: Vec<Vec<String>> = cats
            .iter()
            .map(|&a| {
                let mut counts: HashMap<&str, usize> = HashMap::new();
                for l in base.categorical(a) {
                    *counts.entry(l).or_default() += 1;
                }
                let mut labels: Vec<String> = counts
                    .into_iter()
                    .filter(|&(_, c)| !is_rare_label(c + 1, n, params))
                    .map(|(l, _)| l.to_string())
                    .collect();
                labels.sort();
                labels
            })
            .collect();
        let mut out = Vec::new();
        const LIMIT: usize = 100_000;
        for subset in subsets(cats.len(), 2, params.combo_order) {
            let attrs: Vec<usize> = subset.iter().map(|&p| cats[p]).collect();
            let present: HashSet<Vec<&str>> = (0..self.current.len())
                .map(|r| attrs.iter().map(|&a| self.current.categorical(a)[r].as_str()).collect())
                .collect();
            let radix: Vec<usize> = subset.iter().map(|&p| common[p].len()).collect();
            let total: usize = radix.iter().product();
            for mut code in 0..total {
                let mut labels = vec![""; subset.len()];
                for k in (0..subset.len()).rev() {
                    labels[k] = common[subset[k]][code % radix[k]].as_str();
                    code /= radix[k];
                }
                if !present.contains(&labels) {
                    out.push((attrs.clone(), labels.iter().map(|s| s.to_string()).collect()));
                    if out.len() >= LIMIT {
                        return out;
                    }
                }
            }
        }
        out
    }
}
