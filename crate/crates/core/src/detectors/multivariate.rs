//! Multivariate (local) detectors: joint density of continuous attributes,
//! rare class combinations, and classes that are rare in their numerical
//! neighborhood.

use super::combos::TupleTable;
use super::knn::{knn_scores, upper_quantile, PointSet};
use super::univariate::{is_rare_label, rarity};
use super::{require_attributes, DetectorError, DetectorParams, ScoreVector};
use crate::data::Dataset;

fn require_neighbors(dataset: &Dataset, params: &DetectorParams) -> Result<(), DetectorError> {
    if dataset.len() <= params.k_nn {
        Err(DetectorError::NeighborsExceedCases { k: params.k_nn, n: dataset.len() })
    } else {
        Ok(())
    }
}

/// Type IV detector: mean distance to the `k_nn` nearest other cases in
/// (robust-standardized) continuous space; flagged above the `1 - epsilon`
/// quantile of all scores.
pub fn detect_multidim_numerical(dataset: &Dataset, params: &DetectorParams) -> Result<ScoreVector, DetectorError> {
    params.validate()?;
    require_attributes(dataset.schema().continuous_indices().len(), 2, "continuous")?;
    require_neighbors(dataset, params)?;
    let (points, _) = PointSet::from_dataset(dataset, params.standardize);
    let scores = knn_scores(&points, params.k_nn);
    let threshold = upper_quantile(&scores, params.epsilon);
    let flags = scores.iter().map(|&s| s > threshold).collect();
    Ok(ScoreVector {
        detector_id: "type4".into(),
        case_ids: dataset.case_ids().to_vec(),
        scores,
        flags: Some(flags),
        detail: None,
        params: Some(params.clone()),
    })
}

/// Rare-combination evidence for one case: the largest tuple rarity over all
/// subsets of size >= 2, and the smallest subset size whose tuple is rare
/// while each of its labels is individually common.
pub(crate) fn combination_rarity(
    table: &TupleTable<'_>,
    labels: &[&str],
    extra: usize,
    params: &DetectorParams,
) -> (f64, Vec<usize>) {
    let n = table.len() + extra;
    let mut score: f64 = 0.0;
    let mut fired = Vec::new();
    for (s, subset) in table.subsets.iter().enumerate() {
        if subset.len() < 2 {
            continue;
        }
        let count = table.count(s, labels) + extra;
        score = score.max(rarity(count, n));
        let marginals_common = subset.iter().all(|&p| !is_rare_label(table.count(p, labels) + extra, n, params));
        if count <= params.c_rare && count < n && marginals_common {
            fired.push(s);
        }
    }
    (score, fired)
}

/// Type V detector: score is the largest `-ln(joint frequency)` over label
/// tuples of size 2..=`combo_order`; flagged when some tuple has joint count
/// at most `c_rare` while none of its labels is rare on its own.
pub fn detect_multidim_rare_class(dataset: &Dataset, params: &DetectorParams) -> Result<ScoreVector, DetectorError> {
    params.validate()?;
    let m = dataset.schema().categorical_indices().len();
    require_attributes(m, 2, "categorical")?;
    if params.combo_order > m {
        return Err(DetectorError::ComboOrderTooLarge { order: params.combo_order, available: m });
    }
    let table = TupleTable::new(dataset, params.combo_order);
    let n = dataset.len();
    let mut scores = Vec::with_capacity(n);
    let mut detail = Vec::with_capacity(n);
    for row in 0..n {
        let labels = table.row_labels(row);
        let (score, fired) = combination_rarity(&table, &labels, 0, params);
        scores.push(score);
        detail.push(fired.iter().map(|&s| table.subsets[s].len() as u32).min().unwrap_or(0));
    }
    let flags = detail.iter().map(|&d| d > 0).collect();
    Ok(ScoreVector {
        detector_id: "type5".into(),
        case_ids: dataset.case_ids().to_vec(),
        scores,
        flags: Some(flags),
        detail: Some(detail),
        params: Some(params.clone()),
    })
}

/// Neighborhood class rarity of one case.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalRarity {
    /// Largest `global - local` frequency gap, floored at 0.
    pub score: f64,
    /// Smallest subset size whose tuple is globally common yet locally rare.
    pub order: Option<usize>,
    /// `(subset index, global frequency, local frequency)` of every firing subset.
    pub fired: Vec<(usize, f64, f64)>,
}

/// Compares the frequency of each label (and label tuple) of a case over the
/// whole table with its frequency among `neighbors` (row indices).
/// `extra` is 1 when the case itself is not part of the table.
pub fn local_rarity(
    table: &TupleTable<'_>,
    labels: &[&str],
    neighbors: &[usize],
    extra: usize,
    params: &DetectorParams,
) -> LocalRarity {
    let n = (table.len() + extra) as f64;
    let k = neighbors.len().max(1) as f64;
    let mut score: f64 = 0.0;
    let mut fired = Vec::new();
    for s in 0..table.subsets.len() {
        let global = (table.count(s, labels) + extra) as f64 / n;
        let local = neighbors.iter().filter(|&&row| table.matches(s, row, labels)).count() as f64 / k;
        score = score.max((global - local).max(0.0));
        if global >= params.g_min && local <= params.l_max {
            fired.push((s, global, local));
        }
    }
    let order = fired.iter().map(|&(s, _, _)| table.subsets[s].len()).min();
    LocalRarity { score, order, fired }
}

/// Type VI detector: for each case, label frequencies among its `k_nn`
/// nearest neighbors (continuous space) are compared with global
/// frequencies; flagged when some label or label tuple is globally common
/// (>= `g_min`) but locally rare (<= `l_max`). `detail` carries the order.
pub fn detect_multidim_mixed(dataset: &Dataset, params: &DetectorParams) -> Result<ScoreVector, DetectorError> {
    params.validate()?;
    let schema = dataset.schema();
    require_attributes(schema.continuous_indices().len(), 1, "continuous")?;
    let m = schema.categorical_indices().len();
    require_attributes(m, 1, "categorical")?;
    require_neighbors(dataset, params)?;
    let (points, _) = PointSet::from_dataset(dataset, params.standardize);
    let neighbors = points.neighbor_lists(params.k_nn);
    let table = TupleTable::new(dataset, params.combo_order.min(m));
    let n = dataset.len();
    let mut scores = Vec::with_capacity(n);
    let mut detail = Vec::with_capacity(n);
    for (row, nb) in neighbors.iter().enumerate() {
        let rows: Vec<usize> = nb.iter().map(|x| x.index).collect();
        let lr = local_rarity(&table, &table.row_labels(row), &rows, 0, params);
        scores.push(lr.score);
        detail.push(lr.order.unwrap_or(0) as u32);
    }
    let flags = detail.iter().map(|&d| d > 0).collect();
    Ok(ScoreVector {
        detector_id: "type6".into(),
        case_ids: dataset.case_ids().to_vec(),
        scores,
        flags: Some(flags),
        detail: Some(detail),
        params: Some(params.clone()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Attribute, Schema, Value};

    fn points(rows: &[(f64, f64)]) -> Dataset {
        let schema = Schema::new(vec![Attribute::continuous("x"), Attribute::continuous("y")], None).unwrap();
        Dataset::from_rows(schema, rows.iter().map(|&(x, y)| vec![Value::Num(x), Value::Num(y)]).collect()).unwrap()
    }

    fn labels(columns: &[&str], rows: &[&[&str]]) -> Dataset {
        let schema = Schema::new(columns.iter().map(|c| Attribute::categorical(*c)).collect(), None).unwrap();
        Dataset::from_rows(
            schema,
            rows.iter().map(|r| r.iter().map(|s| Value::Label(s.to_string())).collect()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn isolated_point_tops_the_line() {
        let ds = points(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0), (3.0, 3.0), (4.0, 4.0), (0.0, 4.0)]);
        let params = DetectorParams { k_nn: 1, standardize: false, ..Default::default() };
        let sv = detect_multidim_numerical(&ds, &params).unwrap();
        assert!((sv.scores[5] - 8f64.sqrt()).abs() < 1e-12);
        assert!(sv.scores[..5].iter().all(|s| (s - 2f64.sqrt()).abs() < 1e-12));
        assert_eq!(sv.flags.unwrap(), vec![false, false, false, false, false, true]);
    }

    #[test]
    fn multidim_numerical_preconditions() {
        let ds = points(&[(0.0, 0.0), (1.0, 1.0)]);
        assert_eq!(
            detect_multidim_numerical(&ds, &DetectorParams { k_nn: 2, ..Default::default() }).unwrap_err(),
            DetectorError::NeighborsExceedCases { k: 2, n: 2 }
        );
    }

    #[test]
    fn correlated_columns_have_no_rare_combination() {
        let rows: Vec<&[&str]> = (0..10).map(|i| if i % 2 == 0 { &["a", "x"][..] } else { &["b", "y"][..] }).collect();
        let sv = detect_multidim_rare_class(&labels(&["p", "q"], &rows), &DetectorParams::default()).unwrap();
        assert_eq!(sv.flagged_count(), 0);
    }

    #[test]
    fn tuple_rare_through_a_rare_marginal_is_not_type_v() {
        let mut rows: Vec<&[&str]> = vec![&["a", "x"], &["a", "y"], &["b", "x"], &["b", "y"]];
        rows.extend(std::iter::repeat_n([&["a", "x"][..], &["b", "y"][..]], 4).flatten());
        rows.push(&["c", "x"]); // unique marginal "c"
        rows.push(&["a", "y"]);
        let ds = labels(&["p", "q"], &rows);
        let sv = detect_multidim_rare_class(&ds, &DetectorParams::default()).unwrap();
        let last = ds.len() - 2;
        assert!(!sv.flags.as_ref().unwrap()[last]);
    }

    #[test]
    fn combo_order_bounded_by_attributes() {
        let ds = labels(&["p", "q"], &[&["a", "b"], &["a", "b"]]);
        let params = DetectorParams { combo_order: 3, ..Default::default() };
        assert_eq!(
            detect_multidim_rare_class(&ds, &params).unwrap_err(),
            DetectorError::ComboOrderTooLarge { order: 3, available: 2 }
        );
    }

    fn clusters(a_size: usize, colors_b: &[&str]) -> Dataset {
        let schema = Schema::new(
            vec![Attribute::continuous("x"), Attribute::continuous("y"), Attribute::categorical("color")],
            None,
        )
        .unwrap();
        let mut rows = Vec::new();
        for i in 0..a_size {
            let (dx, dy) = ((i % 5) as f64 * 0.1, (i / 5) as f64 * 0.1);
            rows.push(vec![Value::Num(dx), Value::Num(dy), Value::Label("blue".into())]);
        }
        for (i, c) in colors_b.iter().enumerate() {
            let (dx, dy) = ((i % 5) as f64 * 0.1, (i / 5) as f64 * 0.1);
            rows.push(vec![Value::Num(10.0 + dx), Value::Num(10.0 + dy), Value::Label(c.to_string())]);
        }
        Dataset::from_rows(schema, rows).unwrap()
    }

    #[test]
    fn blue_point_in_pink_cluster() {
        let mut b = vec!["pink"; 10];
        b[7] = "blue";
        let ds = clusters(10, &b);
        let params = DetectorParams { k_nn: 5, standardize: false, ..Default::default() };
        let sv = detect_multidim_mixed(&ds, &params).unwrap();
        let flags = sv.flags.as_ref().unwrap();
        assert!(flags[17]);
        assert_eq!(sv.detail.as_ref().unwrap()[17], 1);
        assert!((sv.scores[17] - 0.55).abs() < 1e-12);
        assert_eq!(flags.iter().filter(|&&f| f).count(), 1);
    }

    #[test]
    fn globally_unique_class_fails_the_commonness_gate() {
        let mut b = vec!["pink"; 10];
        b[7] = "green";
        let params = DetectorParams { k_nn: 5, standardize: false, ..Default::default() };
        let sv = detect_multidim_mixed(&clusters(15, &b), &params).unwrap();
        assert!(!sv.flags.unwrap()[22], "1/25 is below g_min");
    }
}
