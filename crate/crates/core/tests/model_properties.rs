mod common;

use anomtype::data::{
    load_dataset, marginal_stats, standardize, write_dataset, CaseId, Column, Dataset, ScaleMethod,
};
use anomtype::detectors::{DetectorParams, ScoreVector};
use anomtype::eval::{evaluate_scores, rank_auc};
use anomtype::inject::{GroundTruth, TruthEntry};
use anomtype::sequence::{
    cumulative_sum, difference, generate_series, segment_cycles, shuffle_series, windowize, SeriesSpec,
    SymbolSequence,
};
use anomtype::taxonomy::{AnomalyType, ClassificationParams, Classifier};
use common::mixed;
use proptest::prelude::*;

fn classification_params() -> ClassificationParams {
    ClassificationParams {
        thresholds: DetectorParams { k_nn: 5, c_rare: 1, g_min: 0.2, l_max: 0.0, ..DetectorParams::default() },
        multi_label: false,
    }
}

fn primary_types(ds: &Dataset) -> Vec<(Option<AnomalyType>, Option<u32>)> {
    let classifier = Classifier::new(ds, &classification_params()).unwrap();
    classifier.classify_all().into_iter().map(|t| (t.primary_type, t.order)).collect()
}

fn truth_of(entries: &[(u64, AnomalyType)]) -> GroundTruth {
    GroundTruth {
        thresholds: None,
        entries: entries
            .iter()
            .map(|&(id, t)| TruthEntry { case_id: CaseId(id), anomaly: t, attributes: Vec::new(), order: None, params: serde_json::Value::Null })
            .collect(),
    }
}

fn scores(values: Vec<f64>) -> ScoreVector {
    ScoreVector {
        detector_id: "s".into(),
        case_ids: (0..values.len() as u64).map(CaseId).collect(),
        scores: values,
        flags: None,
        detail: None,
        params: None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn marginal_stats_ignore_row_order(
        (ds, perm) in (5usize..60, any::<u64>()).prop_flat_map(|(n, seed)| (Just(mixed(n, seed)), Just((0..n).collect::<Vec<_>>()).prop_shuffle()))
    ) {
        prop_assert_eq!(marginal_stats(&ds), marginal_stats(&ds.reorder(&perm)));
    }

    #[test]
    fn robust_standardization_is_affine_equivariant(n in 5usize..60, seed: u64, a in 0.01f64..100.0, b in -1e3f64..1e3) {
        let ds = mixed(n, seed);
        let moved = ds.with_column(2, Column::Continuous(ds.continuous(2).iter().map(|x| a * x + b).collect())).unwrap();
        let s0 = standardize(&ds, ScaleMethod::Robust).unwrap();
        let s1 = standardize(&moved, ScaleMethod::Robust).unwrap();
        for (x, y) in s0.continuous(2).iter().zip(s1.continuous(2)) {
            prop_assert!((x - y).abs() <= 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn csv_round_trip(n in 0usize..60, seed: u64, scale in -300i32..300) {
        let ds = mixed(n, seed);
        let factor = 10f64.powi(scale / 10);
        let ds = ds.with_column(0, Column::Continuous(ds.continuous(0).iter().map(|x| x * factor).collect())).unwrap();
        let mut buf = Vec::new();
        write_dataset(&ds, &mut buf).unwrap();
        let back = load_dataset(buf.as_slice(), ds.schema()).unwrap();
        prop_assert_eq!(back, ds);
    }

    #[test]
    fn classification_is_deterministic_and_scale_free(n in 12usize..50, seed: u64, a in 0.1f64..10.0, b in -100.0f64..100.0) {
        let ds = mixed(n, seed);
        let base = primary_types(&ds);
        prop_assert_eq!(&base, &primary_types(&ds));
        let moved = ds.with_column(0, Column::Continuous(ds.continuous(0).iter().map(|x| a * x + b).collect())).unwrap();
        prop_assert_eq!(&base, &primary_types(&moved));
    }

    #[test]
    fn classification_ignores_label_names(n in 12usize..50, seed: u64) {
        let ds = mixed(n, seed);
        let mut renamed = ds.clone();
        for index in ds.schema().categorical_indices() {
            let labels = ds.categorical(index).iter().map(|l| format!("#{l}#")).collect();
            renamed = renamed.with_column(index, Column::Categorical(labels)).unwrap();
        }
        prop_assert_eq!(primary_types(&ds), primary_types(&renamed));
    }

    #[test]
    fn rank_metrics_survive_monotone_transforms(
        raw in proptest::collection::vec(-100.0f64..100.0, 20..80),
        picks in proptest::collection::btree_set(0u64..20, 1..8),
    ) {
        let n = raw.len();
        let ds = mixed(n, 1);
        let truth = truth_of(&picks.iter().map(|&id| (id, AnomalyType::MultidimNumerical)).collect::<Vec<_>>());
        let before = evaluate_scores(&scores(raw.clone()), &truth, &ds).unwrap();
        let after = evaluate_scores(&scores(raw.iter().map(|s| (s / 10.0).exp() * 3.0 + 1.0).collect()), &truth, &ds).unwrap();
        prop_assert_eq!(before[0].rank_auc, after[0].rank_auc);
        prop_assert_eq!(before[0].recall_at_k, after[0].recall_at_k);
    }

    #[test]
    fn negated_scores_mirror_the_auc(
        pos in proptest::collection::hash_set(-1_000_000i64..1_000_000, 1..30),
        neg in proptest::collection::hash_set(-1_000_000i64..1_000_000, 1..30),
    ) {
        prop_assume!(pos.is_disjoint(&neg));
        let p: Vec<f64> = pos.iter().map(|&v| v as f64).collect();
        let q: Vec<f64> = neg.iter().map(|&v| v as f64).collect();
        let np: Vec<f64> = p.iter().map(|v| -v).collect();
        let nq: Vec<f64> = q.iter().map(|v| -v).collect();
        prop_assert!((rank_auc(&p, &q) + rank_auc(&np, &nq) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn appended_anomalies_of_another_type_leave_a_types_metrics(
        raw in proptest::collection::vec(0.0f64..1.0, 40..80),
        extra in 1usize..15,
    ) {
        let n = raw.len();
        let full = mixed(n + extra, 2);
        let head = Dataset::new(
            full.schema().clone(),
            full.case_ids()[..n].to_vec(),
            full.columns().iter().map(|c| match c {
                Column::Continuous(v) => Column::Continuous(v[..n].to_vec()),
                Column::Categorical(v) => Column::Categorical(v[..n].to_vec()),
            }).collect(),
        ).unwrap();
        let type_one: Vec<(u64, AnomalyType)> = (0..5).map(|i| (i, AnomalyType::ExtremeValue)).collect();
        let mut with_more = type_one.clone();
        with_more.extend((n..n + extra).map(|i| (i as u64, AnomalyType::MultidimRareClass)));
        let mut all_scores = raw.clone();
        all_scores.extend((0..extra).map(|i| i as f64 * 0.37 % 1.0));
        let a = evaluate_scores(&scores(raw), &truth_of(&type_one), &head).unwrap();
        let b = evaluate_scores(&scores(all_scores), &truth_of(&with_more), &full).unwrap();
        prop_assert_eq!(&a[0], b.iter().find(|m| m.anomaly == AnomalyType::ExtremeValue).unwrap());
    }

    #[test]
    fn difference_and_cumulative_sum_invert(n in 16usize..120, slope in -2.0f64..2.0, amplitude in 0.0f64..5.0, seed: u64) {
        let s = generate_series(&SeriesSpec { n, slope, amplitude, period: 8, noise: 0.3, seed }).unwrap();
        let back = cumulative_sum(&difference(&s).unwrap(), s.values()[0]).unwrap();
        prop_assert_eq!(back.times(), s.times());
        for (x, y) in back.values().iter().zip(s.values()) {
            prop_assert!((x - y).abs() <= 1e-9 * y.abs().max(1.0));
        }
        prop_assert_eq!(&s, &generate_series(&SeriesSpec { n, slope, amplitude, period: 8, noise: 0.3, seed }).unwrap());
    }

    #[test]
    fn transform_output_sizes(tokens in proptest::collection::vec("[abc]", 2..40), width_pick: usize, n in 4usize..100, period in 2usize..8, seed: u64) {
        let width = 2 + width_pick % (tokens.len() - 1);
        let seq = SymbolSequence::new(tokens.clone(), None).unwrap();
        prop_assert_eq!(windowize(&seq, width).unwrap().len(), tokens.len() - width + 1);
        let n = n.max(2 * period);
        let s = generate_series(&SeriesSpec { n, slope: 0.0, amplitude: 1.0, period, noise: 0.1, seed }).unwrap();
        prop_assert_eq!(segment_cycles(&s, period, None).unwrap().dataset.len(), n / period);
        let shuffled = shuffle_series(&s, seed);
        let mut a = s.values().to_vec();
        let mut b = shuffled.values().to_vec();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        prop_assert_eq!(a, b);
        prop_assert_eq!(shuffled.times(), s.times());
    }
}
