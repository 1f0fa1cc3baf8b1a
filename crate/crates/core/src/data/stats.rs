use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Column, DataError, Dataset};

/// Consistency factor that turns the raw median absolute deviation into a
/// standard-deviation estimate under normality.
pub const MAD_SCALE: f64 = 1.4826;

/// How continuous attributes are centered and scaled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScaleMethod {
    /// Mean and population standard deviation.
    #[serde(rename = "sd", alias = "zscore")]
    ZScore,
    /// Median and scaled median absolute deviation.
    #[default]
    #[serde(rename = "mad", alias = "robust")]
    Robust,
}

/// Center and scale of one continuous column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnScale {
    pub center: f64,
    pub scale: f64,
}

impl ColumnScale {
    pub fn compute(values: &[f64], method: ScaleMethod) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self::from_sorted(&sorted, method)
    }

    /// `sorted` must be in ascending order.
    pub fn from_sorted(sorted: &[f64], method: ScaleMethod) -> Self {
        if sorted.is_empty() {
            return ColumnScale { center: 0.0, scale: 0.0 };
        }
        match method {
            ScaleMethod::ZScore => {
                let (mean, sd) = mean_sd_sorted(sorted);
                ColumnScale { center: mean, scale: sd }
            }
            ScaleMethod::Robust => {
                let med = median_sorted(sorted);
                ColumnScale { center: med, scale: MAD_SCALE * raw_mad(sorted, med) }
            }
        }
    }

    /// `(x - center) / scale`, or 0 when the scale is 0.
    pub fn standardize(&self, x: f64) -> f64 {
        if self.scale > 0.0 {
            (x - self.center) / self.scale
        } else {
            0.0
        }
    }
}

pub fn median_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Unscaled median absolute deviation around `center`.
pub fn raw_mad(values: &[f64], center: f64) -> f64 {
    let mut dev: Vec<f64> = values.iter().map(|x| (x - center).abs()).collect();
    dev.sort_by(f64::total_cmp);
    median_sorted(&dev)
}

// Summing in sorted order makes the result independent of row order.
fn mean_sd_sorted(sorted: &[f64]) -> (f64, f64) {
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let mut sq: Vec<f64> = sorted.iter().map(|x| (x - mean) * (x - mean)).collect();
    sq.sort_by(f64::total_cmp);
    let var = sq.iter().sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Linear-interpolation quantile (the common "type 7" definition) of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousStats {
    pub mean: f64,
    pub median: f64,
    /// Population standard deviation (divisor n).
    pub sd: f64,
    pub mad_raw: f64,
    /// `MAD_SCALE * mad_raw`.
    pub mad: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelCount {
    pub count: usize,
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalStats {
    pub labels: BTreeMap<String, LabelCount>,
}

impl CategoricalStats {
    pub fn frequency(&self, label: &str) -> f64 {
        self.labels.get(label).map_or(0.0, |c| c.frequency)
    }

    pub fn count(&self, label: &str) -> usize {
        self.labels.get(label).map_or(0, |c| c.count)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AttributeStats {
    Continuous(ContinuousStats),
    Categorical(CategoricalStats),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalStats {
    pub n: usize,
    /// One entry per schema attribute, in schema order.
    pub attributes: Vec<(String, AttributeStats)>,
}

impl MarginalStats {
    pub fn get(&self, name: &str) -> Option<&AttributeStats> {
        self.attributes.iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }

    pub fn continuous(&self, name: &str) -> Option<&ContinuousStats> {
        match self.get(name) {
            Some(AttributeStats::Continuous(s)) => Some(s),
            _ => None,
        }
    }

    pub fn categorical(&self, name: &str) -> Option<&CategoricalStats> {
        match self.get(name) {
            Some(AttributeStats::Categorical(s)) => Some(s),
            _ => None,
        }
    }
}

pub fn continuous_stats(values: &[f64]) -> ContinuousStats {
    if values.is_empty() {
        return ContinuousStats { mean: 0.0, median: 0.0, sd: 0.0, mad_raw: 0.0, mad: 0.0, min: 0.0, max: 0.0 };
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (mean, sd) = mean_sd_sorted(&sorted);
    let median = median_sorted(&sorted);
    let mad_raw = raw_mad(&sorted, median);
    ContinuousStats {
        mean,
        median,
        sd,
        mad_raw,
        mad: MAD_SCALE * mad_raw,
        min: sorted[0],
        max: sorted[sorted.len() - 1],
    }
}

pub fn categorical_stats(labels: &[String]) -> CategoricalStats {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for label in labels {
        *counts.entry(label.clone()).or_default() += 1;
    }
    let n = labels.len() as f64;
    CategoricalStats {
        labels: counts
            .into_iter()
            .map(|(label, count)| (label, LabelCount { count, frequency: count as f64 / n }))
            .collect(),
    }
}

pub fn marginal_stats(dataset: &Dataset) -> MarginalStats {
    let attributes = dataset
        .schema()
        .attributes()
        .iter()
        .zip(dataset.columns())
        .map(|(attr, column)| {
            let stats = match column {
                Column::Continuous(v) => AttributeStats::Continuous(continuous_stats(v)),
                Column::Categorical(v) => AttributeStats::Categorical(categorical_stats(v)),
            };
            (attr.name.clone(), stats)
        })
        .collect();
    MarginalStats { n: dataset.len(), attributes }
}

/// Replaces each continuous value by `(value - center) / scale`; zero-scale
/// columns become all zeros. Categorical attributes are untouched.
pub fn standardize(dataset: &Dataset, method: ScaleMethod) -> Result<Dataset, DataError> {
    let continuous = dataset.schema().continuous_indices();
    if continuous.is_empty() {
        return Err(DataError::NoContinuous);
    }
    let mut out = dataset.clone();
    for index in continuous {
        let values = dataset.continuous(index);
        let scale = ColumnScale::compute(values, method);
        let column = Column::Continuous(values.iter().map(|&x| scale.standardize(x)).collect());
        out = out.with_column(index, column)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Attribute, Schema, Value};

    fn one_column(values: &[f64]) -> Dataset {
        let schema = Schema::new(vec![Attribute::continuous("x")], None).unwrap();
        Dataset::from_rows(schema, values.iter().map(|&x| vec![Value::Num(x)]).collect()).unwrap()
    }

    #[test]
    fn mad_of_heavy_tailed_column() {
        let s = continuous_stats(&[1.0, 2.0, 3.0, 4.0, 100.0]);
        assert_eq!(s.median, 3.0);
        assert_eq!(s.mad_raw, 1.0);
        assert!((s.mad - 1.4826).abs() < 1e-12);
        assert_eq!(s.mean, 22.0);
        assert_eq!((s.min, s.max), (1.0, 100.0));
    }

    #[test]
    fn constant_column_has_zero_scale() {
        let s = continuous_stats(&[5.0, 5.0, 5.0]);
        assert_eq!((s.mean, s.sd, s.mad), (5.0, 0.0, 0.0));
    }

    #[test]
    fn empty_column_is_degenerate_but_valid() {
        let s = continuous_stats(&[]);
        assert_eq!(s.sd, 0.0);
        assert!(s.min <= s.max);
    }

    #[test]
    fn label_frequencies() {
        let mut labels = vec!["red".to_string(); 7];
        labels.push("blue".into());
        let s = categorical_stats(&labels);
        assert_eq!(s.frequency("blue"), 0.125);
        assert_eq!(s.count("red"), 7);
        let total: f64 = s.labels.values().map(|c| c.frequency).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zscore_uses_population_divisor() {
        let z = standardize(&one_column(&[0.0, 10.0]), ScaleMethod::ZScore).unwrap();
        assert_eq!(z.continuous(0), &[-1.0, 1.0]);
    }

    #[test]
    fn constant_column_standardizes_to_zero() {
        let z = standardize(&one_column(&[4.0, 4.0, 4.0]), ScaleMethod::Robust).unwrap();
        assert_eq!(z.continuous(0), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn robust_standardization_of_extreme_value() {
        let z = standardize(&one_column(&[1.0, 2.0, 3.0, 4.0, 100.0]), ScaleMethod::Robust).unwrap();
        assert!((z.continuous(0)[4] - 97.0 / 1.4826).abs() < 1e-9);
        assert!((z.continuous(0)[4] - 65.43).abs() < 0.01);
    }

    #[test]
    fn standardize_requires_continuous_attribute() {
        let schema = Schema::new(vec![Attribute::categorical("c")], None).unwrap();
        let ds = Dataset::from_rows(schema, vec![vec![Value::Label("a".into())]]).unwrap();
        assert!(matches!(standardize(&ds, ScaleMethod::Robust), Err(DataError::NoContinuous)));
    }

    #[test]
    fn type7_quantile() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&s, 0.5), 2.5);
        assert_eq!(quantile_sorted(&s, 1.0), 4.0);
        assert_eq!(quantile_sorted(&s, 0.0), 1.0);
    }
}
