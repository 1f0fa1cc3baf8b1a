use std::collections::BTreeSet;
use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::SequenceError;
use crate::data::{Attribute, CaseId, Column, ColumnScale, Dataset, ScaleMethod, Schema};
use crate::inject::{GroundTruth, TruthEntry};
use crate::numfmt::round_sig;
use crate::taxonomy::{map_external, AnomalyType, ExternalKind, ExternalSource, ExternalTypeLabel, MappingContext};

pub const TIME: &str = "time";
pub const VALUE: &str = "value";

/// A value indexed by consecutive integer time points. Backed by a dataset
/// with attributes `time` (the dependency attribute) and `value`.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    dataset: Dataset,
    period: Option<usize>,
}

fn series_schema() -> Schema {
    Schema::new(vec![Attribute::continuous(TIME), Attribute::continuous(VALUE)], Some(TIME.into()))
        .expect("fixed schema is valid")
}

impl Series {
    /// Series with time points `start, start + 1, ...`.
    pub fn new(values: Vec<f64>, start: i64, period: Option<usize>) -> Result<Series, SequenceError> {
        let n = values.len();
        let times = (0..n).map(|i| (start + i as i64) as f64).collect();
        let ids = (0..n as u64).map(CaseId).collect();
        let dataset = Dataset::new(series_schema(), ids, vec![Column::Continuous(times), Column::Continuous(values)])?;
        Ok(Series { dataset, period })
    }

    /// Wraps a dataset with continuous `time` and `value` attributes whose
    /// times are consecutive integers.
    pub fn from_dataset(dataset: Dataset, period: Option<usize>) -> Result<Series, SequenceError> {
        let schema = dataset.schema();
        let (Some(t), Some(v)) = (schema.index_of(TIME), schema.index_of(VALUE)) else {
            return Err(SequenceError::NotASeries("needs attributes \"time\" and \"value\"".into()));
        };
        if schema.kind(t) != crate::data::AttributeKind::Continuous || schema.kind(v) != crate::data::AttributeKind::Continuous {
            return Err(SequenceError::NotASeries("time and value must be continuous".into()));
        }
        let times = dataset.continuous(t);
        if times.iter().any(|x| x.fract() != 0.0) || times.windows(2).any(|w| w[1] != w[0] + 1.0) {
            return Err(SequenceError::NotASeries("time must be consecutive integers".into()));
        }
        let values = dataset.continuous(v).to_vec();
        let start = times.first().copied().unwrap_or(0.0) as i64;
        let mut s = Series::new(values, start, period)?;
        s.dataset = Dataset::new(s.dataset.schema().clone(), dataset.case_ids().to_vec(), s.dataset.columns().to_vec())?;
        Ok(s)
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn into_dataset(self) -> Dataset {
        self.dataset
    }

    pub fn period(&self) -> Option<usize> {
        self.period
    }

    pub fn len(&self) -> usize {
        self.dataset.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dataset.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        self.dataset.continuous(0)
    }

    pub fn values(&self) -> &[f64] {
        self.dataset.continuous(1)
    }

    pub fn case_ids(&self) -> &[CaseId] {
        self.dataset.case_ids()
    }

    fn start(&self) -> i64 {
        self.times().first().copied().unwrap_or(0.0) as i64
    }

    /// Same time points and case ids with new values.
    fn with_values(&self, values: Vec<f64>) -> Series {
        let dataset = self.dataset.with_column(1, Column::Continuous(values)).expect("finite values");
        Series { dataset, period: self.period }
    }
}

/// Trend plus sinusoidal season plus Gaussian noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesSpec {
    pub n: usize,
    #[serde(default)]
    pub slope: f64,
    #[serde(default)]
    pub amplitude: f64,
    pub period: usize,
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
}

/// `value(t) = slope·t + amplitude·sin(2πt/period) + noise·N(0, 1)` for
/// `t = 0..n`, kept to 12 significant digits.
pub fn generate_series(spec: &SeriesSpec) -> Result<Series, SequenceError> {
    if spec.period < 2 {
        return Err(SequenceError::InvalidParams(format!("period must be >= 2, got {}", spec.period)));
    }
    if spec.n < 2 * spec.period {
        return Err(SequenceError::InvalidParams(format!("n = {} is shorter than two periods", spec.n)));
    }
    if !(spec.noise.is_finite() && spec.noise >= 0.0 && spec.slope.is_finite() && spec.amplitude.is_finite()) {
        return Err(SequenceError::InvalidParams("slope, amplitude and noise must be finite, noise >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let values = (0..spec.n)
        .map(|t| {
            let t = t as f64;
            let z: f64 = rng.sample(StandardNormal);
            round_sig(spec.slope * t + spec.amplitude * (2.0 * PI * t / spec.period as f64).sin() + spec.noise * z)
        })
        .collect();
    Series::new(values, 0, Some(spec.period))
}

/// Within-series anomaly kinds; `t0` is a row position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SeriesAnomalyKind {
    Additive { t0: usize, magnitude: f64 },
    /// Offset `magnitude·decay^(t - t0)` for `t >= t0`.
    TransitoryChange { t0: usize, magnitude: f64, decay: f64 },
    LevelShift { t0: usize, magnitude: f64 },
    /// From `t0` on, the seasonal amplitude grows by `amplitude_delta` and the
    /// trend slope by `slope_delta`.
    Innovational { t0: usize, amplitude_delta: f64, slope_delta: f64 },
    /// The values of one full cycle are put in a random order.
    DeviantCycle { cycle: usize },
}

/// Points of a transitory change are marked until the offset decays below
/// this fraction of the initial magnitude.
pub const TRANSITORY_CUTOFF: f64 = 0.05;

impl SeriesAnomalyKind {
    pub fn external(&self) -> ExternalKind {
        match self {
            SeriesAnomalyKind::Additive { .. } => ExternalKind::Additive,
            SeriesAnomalyKind::TransitoryChange { .. } => ExternalKind::TransitoryChange,
            SeriesAnomalyKind::LevelShift { .. } => ExternalKind::LevelShift,
            SeriesAnomalyKind::Innovational { .. } => ExternalKind::Innovational,
            SeriesAnomalyKind::DeviantCycle { .. } => ExternalKind::DeviantCycle,
        }
    }
}

/// Applies one anomaly. Returns the modified series, ground truth for every
/// affected time point, and the candidate types from the external mapping
/// (globally extreme = some affected value has robust |z| > 3 within the
/// modified series).
pub fn inject_series_anomaly(
    series: &Series,
    kind: &SeriesAnomalyKind,
    seed: u64,
) -> Result<(Series, GroundTruth, BTreeSet<AnomalyType>), SequenceError> {
    let n = series.len();
    let mut values = series.values().to_vec();
    let out_of_range = |t0: usize| SequenceError::InvalidParams(format!("t0 = {t0} outside the series of length {n}"));
    let (affected, params): (Vec<usize>, serde_json::Value) = match *kind {
        SeriesAnomalyKind::Additive { t0, magnitude } => {
            if t0 >= n {
                return Err(out_of_range(t0));
            }
            values[t0] += magnitude;
            (vec![t0], json!({ "magnitude": magnitude }))
        }
        SeriesAnomalyKind::TransitoryChange { t0, magnitude, decay } => {
            if t0 >= n {
                return Err(out_of_range(t0));
            }
            if !(decay > 0.0 && decay < 1.0) {
                return Err(SequenceError::InvalidParams(format!("decay must lie in (0, 1), got {decay}")));
            }
            let mut affected = Vec::new();
            let mut factor = 1.0;
            for (t, v) in values.iter_mut().enumerate().skip(t0) {
                *v += magnitude * factor;
                if factor >= TRANSITORY_CUTOFF {
                    affected.push(t);
                }
                factor *= decay;
            }
            (affected, json!({ "magnitude": magnitude, "decay": decay }))
        }
        SeriesAnomalyKind::LevelShift { t0, magnitude } => {
            if t0 >= n {
                return Err(out_of_range(t0));
            }
            for v in &mut values[t0..] {
                *v += magnitude;
            }
            ((t0..n).collect(), json!({ "magnitude": magnitude }))
        }
        SeriesAnomalyKind::Innovational { t0, amplitude_delta, slope_delta } => {
            if t0 >= n {
                return Err(out_of_range(t0));
            }
            if amplitude_delta != 0.0 && series.period.is_none() {
                return Err(SequenceError::InvalidParams("an amplitude change needs a periodic series".into()));
            }
            let start = series.start();
            for (t, v) in values.iter_mut().enumerate().skip(t0) {
                let time = (start + t as i64) as f64;
                let season = series.period.map_or(0.0, |p| (2.0 * PI * time / p as f64).sin());
                *v += amplitude_delta * season + slope_delta * (t - t0) as f64;
            }
            ((t0..n).collect(), json!({ "amplitude_delta": amplitude_delta, "slope_delta": slope_delta }))
        }
        SeriesAnomalyKind::DeviantCycle { cycle } => {
            let p = series.period.ok_or_else(|| SequenceError::InvalidParams("deviant_cycle needs a periodic series".into()))?;
            let range = cycle * p..(cycle + 1) * p;
            if range.end > n {
                return Err(SequenceError::InvalidParams(format!("cycle {cycle} is not complete in a series of length {n}")));
            }
            let original = values[range.clone()].to_vec();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut order: Vec<usize> = (0..p).collect();
            if original.iter().any(|&x| x != original[0]) {
                while order.iter().enumerate().all(|(i, &j)| original[i] == original[j]) {
                    order.shuffle(&mut rng);
                }
            }
            for (i, &j) in order.iter().enumerate() {
                values[range.start + i] = original[j];
            }
            (range.collect(), json!({ "cycle": cycle, "permutation": order }))
        }
    };
    let values: Vec<f64> = values.into_iter().map(round_sig).collect();
    let modified = series.with_values(values);

    let scale = ColumnScale::compute(modified.values(), ScaleMethod::Robust);
    let globally_extreme = affected
        .iter()
        .any(|&t| crate::detectors::univariate::deviation(modified.values()[t], &scale) > 3.0);
    let label = ExternalTypeLabel::new(ExternalSource::Kaiser, kind.external().as_str()).expect("kaiser vocabulary");
    let mapped = map_external(label, MappingContext { globally_extreme, dependent_data: true })?;
    let anomaly = *mapped.iter().next().expect("non-empty mapping");
    let attributes = if anomaly == AnomalyType::ExtremeValue { vec![VALUE.to_string()] } else { vec![TIME.to_string(), VALUE.to_string()] };
    let mut params = params;
    params["kind"] = json!(kind.external().as_str());
    params["globally_extreme"] = json!(globally_extreme);
    let entries = affected
        .iter()
        .map(|&t| TruthEntry {
            case_id: modified.case_ids()[t],
            anomaly,
            attributes: attributes.clone(),
            order: None,
            params: params.clone(),
        })
        .collect();
    Ok((modified, GroundTruth { thresholds: None, entries }, mapped))
}

/// First differences; output point `t + 1` holds `value(t + 1) - value(t)`.
pub fn difference(series: &Series) -> Result<Series, SequenceError> {
    let v = series.values();
    if v.len() < 2 {
        return Err(SequenceError::InvalidParams(format!("differencing needs n >= 2, got {}", v.len())));
    }
    let diffs = v.windows(2).map(|w| w[1] - w[0]).collect();
    Series::new(diffs, series.start() + 1, series.period)
}

/// Inverse of [`difference`] given the first value of the original series.
pub fn cumulative_sum(diffs: &Series, initial: f64) -> Result<Series, SequenceError> {
    let mut values = Vec::with_capacity(diffs.len() + 1);
    let mut acc = initial;
    values.push(acc);
    for d in diffs.values() {
        acc += d;
        values.push(acc);
    }
    Series::new(values, diffs.start() - 1, diffs.period)
}

/// Randomly reorders the values over the fixed time points; case ids travel
/// with their values.
pub fn shuffle_series(series: &Series, seed: u64) -> Series {
    let mut order: Vec<usize> = (0..series.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let moved = series.dataset.reorder(&order);
    let dataset = moved
        .with_column(0, Column::Continuous(series.times().to_vec()))
        .expect("same length");
    Series { dataset, period: series.period }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize, amplitude: f64, period: usize, noise: f64) -> SeriesSpec {
        SeriesSpec { n, slope: 0.0, amplitude, period, noise, seed: 4 }
    }

    #[test]
    fn generator_cases() {
        let flat = generate_series(&SeriesSpec { n: 10, slope: 0.0, amplitude: 0.0, period: 5, noise: 0.0, seed: 1 }).unwrap();
        assert!(flat.values().iter().all(|&v| v == 0.0));
        let wave = generate_series(&spec(16, 1.0, 8, 0.0)).unwrap();
        assert_eq!(wave.values()[2], 1.0);
        let a = generate_series(&spec(40, 2.0, 8, 0.5)).unwrap();
        assert_eq!(a, generate_series(&spec(40, 2.0, 8, 0.5)).unwrap());
        assert!(generate_series(&spec(10, 1.0, 8, 0.0)).is_err());
        assert!(generate_series(&spec(10, 1.0, 1, 0.0)).is_err());
    }

    #[test]
    fn step_differences() {
        let s = Series::new(vec![5.0, 5.0, 5.0, 5.0, 9.0, 9.0, 9.0, 9.0], 0, None).unwrap();
        let d = difference(&s).unwrap();
        assert_eq!(d.values(), &[0.0, 0.0, 0.0, 4.0, 0.0, 0.0, 0.0]);
        assert_eq!(d.times()[3], 4.0, "the jump is reported at the shift point");
        assert_eq!(cumulative_sum(&d, 5.0).unwrap().values(), s.values());
        assert!(difference(&Series::new(vec![1.0], 0, None).unwrap()).is_err());
    }

    #[test]
    fn additive_mapping_depends_on_magnitude() {
        let s = generate_series(&spec(80, 5.0, 20, 0.1)).unwrap();
        let scale = ColumnScale::compute(s.values(), ScaleMethod::Robust).scale;
        let big = SeriesAnomalyKind::Additive { t0: 30, magnitude: 10.0 * scale };
        let (_, truth, mapped) = inject_series_anomaly(&s, &big, 0).unwrap();
        assert_eq!(mapped, [AnomalyType::ExtremeValue].into());
        assert_eq!(truth.entries[0].case_id, CaseId(30));
        // a bump at a trough stays inside the global range
        let small = SeriesAnomalyKind::Additive { t0: 15, magnitude: 4.0 };
        let (m, _, mapped) = inject_series_anomaly(&s, &small, 0).unwrap();
        assert!(m.values()[15] < 0.0);
        assert_eq!(mapped, [AnomalyType::MultidimNumerical].into());
        let shift = SeriesAnomalyKind::LevelShift { t0: 40, magnitude: 2.0 };
        assert_eq!(inject_series_anomaly(&s, &shift, 0).unwrap().2, [AnomalyType::MultidimNumerical].into());
    }

    #[test]
    fn deviant_cycle_stays_in_range() {
        let s = generate_series(&spec(80, 5.0, 20, 0.1)).unwrap();
        let (m, truth, mapped) = inject_series_anomaly(&s, &SeriesAnomalyKind::DeviantCycle { cycle: 2 }, 9).unwrap();
        assert_eq!(truth.len(), 20);
        assert_eq!(mapped, [AnomalyType::MultidimNumerical].into());
        let mut before = s.values()[40..60].to_vec();
        let mut after = m.values()[40..60].to_vec();
        assert_ne!(before, after);
        before.sort_by(f64::total_cmp);
        after.sort_by(f64::total_cmp);
        assert_eq!(before, after);
        let aperiodic = Series::new(vec![0.0; 40], 0, None).unwrap();
        assert!(inject_series_anomaly(&aperiodic, &SeriesAnomalyKind::DeviantCycle { cycle: 0 }, 1).is_err());
    }

    #[test]
    fn transitory_marks_until_decayed() {
        let s = Series::new(vec![0.0; 30], 0, None).unwrap();
        let kind = SeriesAnomalyKind::TransitoryChange { t0: 5, magnitude: 8.0, decay: 0.5 };
        let (m, truth, _) = inject_series_anomaly(&s, &kind, 0).unwrap();
        assert_eq!(m.values()[6], 4.0);
        // 0.5^4 = 0.0625 >= 0.05, 0.5^5 < 0.05
        assert_eq!(truth.len(), 5);
        assert!(inject_series_anomaly(&s, &SeriesAnomalyKind::Additive { t0: 30, magnitude: 1.0 }, 0).is_err());
    }

    #[test]
    fn shuffle_keeps_times_and_moves_ids() {
        let s = Series::new((0..10).map(f64::from).collect(), 0, None).unwrap();
        let sh = shuffle_series(&s, 3);
        assert_eq!(sh.times(), s.times());
        for (id, v) in sh.case_ids().iter().zip(sh.values()) {
            assert_eq!(id.0 as f64, *v);
        }
    }
}
