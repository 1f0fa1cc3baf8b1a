//! Acceptance suite. Runs each criterion at its stated tolerance and time
//! budget and prints one PASS/FAIL line per criterion.

use std::cell::Cell;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use anomtype::data::{Attribute, CaseId, Column, Dataset, Schema, ScaleMethod, Value};
use anomtype::detectors::univariate::{extreme_scores_by_attribute, rarity_scores_by_attribute};
use anomtype::detectors::{
    detect_extreme_value, detect_multidim_mixed, detect_multidim_numerical, detect_multidim_rare_class,
    detect_rare_class, run_detector, DetectorParams, ScoreVector, DETECTOR_IDS,
};
use anomtype::eval::{cross_matrix, evaluate_scores};
use anomtype::inject::{
    build_benchmark, generate_base, reference_specs, BaseSpec, CategoricalSpec, ClusterSpec, GroundTruth,
    InjectionSpec, LabelDistribution, TruthEntry,
};
use anomtype::sequence::{
    difference, generate_series, inject_series_anomaly, shuffle_series, windowize, SeriesAnomalyKind, SeriesSpec,
    SymbolSequence,
};
use anomtype::taxonomy::{
    grid_cell, locality, type_properties, AnomalyType, Cardinality, ClassificationParams, Classifier, DataKinds,
    Locality,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

type Check = Result<String, String>;
type Criterion = (u32, &'static str, u64, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "grid completeness", 1, grid_completeness),
        (2, "injection round trip", 30, round_trip),
        (3, "diagonal dominance", 60, diagonal_dominance),
        (4, "oracle equivalence", 30, oracle_equivalence),
        (5, "hand-computed values", 1, hand_computed),
        (6, "phase sequence", 1, phase_sequence),
        (7, "level-shift pipeline", 10, level_shift),
        (8, "shuffle destruction", 30, shuffle_destruction),
        (9, "invariance suite", 60, invariance_suite),
        (10, "end-to-end determinism", 60, end_to_end),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (number, name, budget, run) in criteria {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let in_budget = elapsed <= Duration::from_secs(budget);
        let (pass, detail) = match result {
            Ok(d) if in_budget => (true, d),
            Ok(d) => (false, format!("{d}; over the time budget")),
            Err(e) => (false, e),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {number:>2} {name:<24} {} ({detail}; {:.2}s of {budget}s)",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------- oracles

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn robust(values: &[f64]) -> (f64, f64) {
    let m = median(values);
    let dev: Vec<f64> = values.iter().map(|x| (x - m).abs()).collect();
    (m, 1.4826 * median(&dev))
}

/// Linear-interpolation quantile of `h = (n - 1)·q`.
fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// The `k` nearest rows of `points` to `query` by (distance, row), skipping `skip`.
fn nearest(points: &[Vec<f64>], query: &[f64], k: usize, skip: Option<usize>) -> Vec<(usize, f64)> {
    let mut all: Vec<(f64, usize)> =
        (0..points.len()).filter(|&j| Some(j) != skip).map(|j| (distance(query, &points[j]), j)).collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    all.into_iter().take(k).map(|(d, j)| (j, d)).collect()
}

fn mean_distance(nb: &[(usize, f64)]) -> f64 {
    nb.iter().map(|(_, d)| d).sum::<f64>() / nb.len() as f64
}

/// Continuous rows, optionally robust-standardized with the given scales.
fn continuous_rows(ds: &Dataset, rows: usize, scales: Option<&[(f64, f64)]>) -> Vec<Vec<f64>> {
    let cols = ds.schema().continuous_indices();
    (0..rows)
        .map(|r| {
            cols.iter()
                .enumerate()
                .map(|(j, &c)| {
                    let x = ds.continuous(c)[r];
                    match scales {
                        Some(s) if s[j].1 > 0.0 => (x - s[j].0) / s[j].1,
                        Some(_) => 0.0,
                        None => x,
                    }
                })
                .collect()
        })
        .collect()
}

fn label_columns(ds: &Dataset) -> Vec<Vec<String>> {
    ds.schema().categorical_indices().iter().map(|&i| ds.categorical(i).to_vec()).collect()
}

fn joint_count(cols: &[Vec<String>], attrs: &[usize], labels: &[&str], rows: usize) -> usize {
    (0..rows).filter(|&r| attrs.iter().zip(labels).all(|(&a, l)| cols[a][r] == *l)).count()
}

fn rare(count: usize, n: usize, p: &DetectorParams) -> bool {
    count < n && (count as f64 / n as f64 <= p.tau_rare || count <= p.c_rare)
}

fn attribute_subsets(m: usize, min: usize, max: usize) -> Vec<Vec<usize>> {
    (1u32..(1 << m))
        .map(|mask| (0..m).filter(|i| mask & (1 << i) != 0).collect::<Vec<_>>())
        .filter(|s| s.len() >= min && s.len() <= max)
        .collect()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

// ---------------------------------------------------------------- 1

fn grid_completeness() -> Check {
    let cells: BTreeSet<(DataKinds, Cardinality)> = AnomalyType::ALL.iter().map(|&t| grid_cell(t)).collect();
    ensure(cells.len() == 6, || format!("{} distinct cells for six types", cells.len()))?;
    for kinds in [DataKinds::Continuous, DataKinds::Categorical, DataKinds::Mixed] {
        for card in [Cardinality::Univariate, Cardinality::Multivariate] {
            ensure(cells.contains(&(kinds, card)), || format!("cell {kinds:?}/{card:?} uncovered"))?;
        }
    }
    for t in AnomalyType::ALL {
        let props = type_properties(t);
        let (kinds, card) = grid_cell(t);
        ensure(props.cardinality == card && props.data_kinds == kinds.kinds(), || format!("{t:?} properties differ from its cell"))?;
        ensure((locality(t) == Locality::Global) == (card == Cardinality::Univariate), || format!("{t:?} locality"))?;
        ensure(props.locality == locality(t), || format!("{t:?} locality field"))?;
    }
    Ok("6 types cover the 3x2 grid; global iff univariate".into())
}

// ---------------------------------------------------------------- 2 and 3

struct Bench {
    dataset: Dataset,
    truth: GroundTruth,
    inj: InjectionSpec,
    base_n: usize,
}

fn bench() -> &'static Bench {
    static BENCH: OnceLock<Bench> = OnceLock::new();
    BENCH.get_or_init(|| {
        let (base, inj) = reference_specs(10, 1);
        let (dataset, truth) = build_benchmark(&base, &inj).expect("reference benchmark builds");
        Bench { dataset, truth, inj, base_n: base.n_cases }
    })
}

fn round_trip() -> Check {
    let b = bench();
    let ds = &b.dataset;
    let p = &b.inj.thresholds;
    ensure(b.truth.len() == 60, || format!("{} injected cases", b.truth.len()))?;

    let classifier = Classifier::new(ds, &ClassificationParams { thresholds: p.clone(), multi_label: false })
        .map_err(|e| e.to_string())?;
    let recovered = b
        .truth
        .entries
        .iter()
        .filter(|e| classifier.classify(e.case_id).map(|a| a.primary_type) == Ok(Some(e.anomaly)))
        .count();

    // independent construction checks against the base rows
    let n = b.base_n;
    let cont = ds.schema().continuous_indices();
    let cats = ds.schema().categorical_indices();
    let base_cols: Vec<Vec<f64>> = cont.iter().map(|&c| ds.continuous(c)[..n].to_vec()).collect();
    let scales: Vec<(f64, f64)> = base_cols.iter().map(|v| robust(v)).collect();
    let points = continuous_rows(ds, n, Some(&scales));
    let base_knn: Vec<f64> = (0..n).map(|i| mean_distance(&nearest(&points, &points[i], p.k_nn, Some(i)))).collect();
    let density_threshold = quantile(&base_knn, 1.0 - b.inj.density_epsilon);
    let labels = label_columns(ds);
    let cat_pos = |name: &str| cats.iter().position(|&c| ds.schema().name(c) == name).expect("categorical attribute");

    let mut failures = Vec::new();
    for e in &b.truth.entries {
        let row = ds.position(e.case_id).expect("truth id in dataset");
        if row < n {
            failures.push(format!("{} overwrites a base case", e.case_id));
            continue;
        }
        let x: Vec<f64> = cont.iter().map(|&c| ds.continuous(c)[row]).collect();
        let z: Vec<f64> = x.iter().zip(&scales).map(|(v, (m, s))| (v - m).abs() / s).collect();
        let extreme = z.iter().any(|&z| z > p.k_extreme);
        let rare_label = (0..cats.len()).any(|a| rare(joint_count(&labels, &[a], &[&labels[a][row]], n), n, p));
        let std: Vec<f64> = x.iter().zip(&scales).map(|(v, (m, s))| (v - m) / s).collect();
        let ok = match e.anomaly {
            AnomalyType::ExtremeValue => extreme && !rare_label,
            AnomalyType::RareClass => !extreme && rare_label,
            AnomalyType::SimpleMixed => extreme && rare_label,
            AnomalyType::MultidimNumerical => {
                let in_band = base_cols.iter().zip(&x).all(|(col, &v)| {
                    quantile(col, b.inj.band[0]) <= v && v <= quantile(col, b.inj.band[1])
                });
                let score = mean_distance(&nearest(&points, &std, p.k_nn, None));
                in_band && !extreme && !rare_label && score > density_threshold
            }
            AnomalyType::MultidimRareClass => {
                let attrs: Vec<usize> = e.attributes.iter().map(|a| cat_pos(a)).collect();
                let tuple: Vec<&str> = attrs.iter().map(|&a| labels[a][row].as_str()).collect();
                let common = attrs.iter().zip(&tuple).all(|(&a, l)| {
                    let c = joint_count(&labels, &[a], &[l], n);
                    c > p.c_rare && c as f64 / n as f64 > p.tau_rare
                });
                attrs.len() >= 2 && joint_count(&labels, &attrs, &tuple, n) == 0 && common && !extreme
            }
            AnomalyType::MultidimMixed => {
                let attrs: Vec<usize> = e.attributes.iter().map(|a| cat_pos(a)).collect();
                let tuple: Vec<&str> = attrs.iter().map(|&a| labels[a][row].as_str()).collect();
                let global = joint_count(&labels, &attrs, &tuple, n) as f64 / n as f64;
                let local = nearest(&points, &std, p.k_nn, None)
                    .iter()
                    .filter(|(j, _)| attrs.iter().zip(&tuple).all(|(&a, l)| labels[a][*j] == *l))
                    .count();
                global >= p.g_min && local == 0 && e.order == Some(attrs.len() as u32) && !extreme
            }
        };
        if !ok {
            failures.push(format!("{} ({})", e.case_id, e.anomaly.roman()));
        }
    }
    ensure(failures.is_empty(), || format!("construction assertions failed for {}", failures.join(", ")))?;
    ensure(recovered * 100 >= 95 * 60, || format!("recovered {recovered}/60"))?;
    Ok(format!("recovered {recovered}/60, construction assertions 60/60"))
}

fn diagonal_dominance() -> Check {
    let b = bench();
    let report = cross_matrix(&DETECTOR_IDS, (&b.dataset, &b.truth), &b.inj.thresholds, "reference")
        .map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    for (i, id) in DETECTOR_IDS.iter().enumerate() {
        let own = AnomalyType::ALL[i];
        let diag = report.get(id, own).ok_or("missing diagonal cell")?.rank_auc;
        let (worst_type, worst) = AnomalyType::ALL
            .iter()
            .filter(|&&t| t != own)
            .map(|&t| (t, report.get(id, t).map_or(f64::NAN, |m| m.rank_auc)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("five other types");
        ensure(diag >= 0.9, || format!("{id} own-type AUC {diag:.3}"))?;
        ensure(worst <= 0.6, || format!("{id} lowest off-type AUC {worst:.3}"))?;
        parts.push(format!("{id} {diag:.2}/{}:{worst:.2}", worst_type.roman()));
    }
    let iv_recall = report.get("type1", AnomalyType::MultidimNumerical).and_then(|m| m.recall);
    ensure(iv_recall == Some(0.0), || format!("type1 recall on IV is {iv_recall:?}"))?;
    Ok(format!("{}; type1 recall on IV 0", parts.join(", ")))
}

// ---------------------------------------------------------------- 4

fn oracle_base(seed: u64) -> Dataset {
    let strings = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let spec = BaseSpec {
        n_cases: 500,
        seed,
        continuous: strings(&["x", "y", "z"]),
        clusters: vec![
            ClusterSpec { weight: 0.6, means: vec![0.0, 0.0, 0.0], scales: vec![1.0, 2.0, 0.5] },
            ClusterSpec { weight: 0.4, means: vec![5.0, -3.0, 1.0], scales: vec![0.5, 1.0, 3.0] },
        ],
        categorical: vec![
            CategoricalSpec {
                name: "a".into(),
                distribution: LabelDistribution::Fixed { labels: strings(&["p", "q", "r"]), weights: vec![0.6, 0.39, 0.01] },
            },
            CategoricalSpec {
                name: "b".into(),
                distribution: LabelDistribution::ByCluster {
                    labels: strings(&["hi", "lo"]),
                    weights: vec![vec![0.97, 0.03], vec![0.02, 0.98]],
                },
            },
            CategoricalSpec {
                name: "c".into(),
                distribution: LabelDistribution::Fixed {
                    labels: strings(&["s", "t", "u", "v"]),
                    weights: vec![0.45, 0.45, 0.09, 0.01],
                },
            },
        ],
    };
    generate_base(&spec).expect("valid spec")
}

fn oracle_equivalence() -> Check {
    let mut checked = 0;
    for seed in 1..=3u64 {
        let ds = oracle_base(seed);
        let n = ds.len();
        let ncont = ds.schema().continuous_indices().len();
        let raw = continuous_rows(&ds, n, None);
        let scales: Vec<(f64, f64)> =
            (0..ncont).map(|j| robust(&raw.iter().map(|r| r[j]).collect::<Vec<_>>())).collect();
        let std = continuous_rows(&ds, n, Some(&scales));
        for (standardize, k) in [(false, 5), (true, 10)] {
            let params = DetectorParams { k_nn: k, standardize, ..DetectorParams::default() };
            let sv = detect_multidim_numerical(&ds, &params).map_err(|e| e.to_string())?;
            let pts = if standardize { &std } else { &raw };
            for r in 0..n {
                let oracle = mean_distance(&nearest(pts, &pts[r], k, Some(r)));
                ensure((sv.scores[r] - oracle).abs() <= 1e-9, || format!("kNN row {r}: {} vs {oracle}", sv.scores[r]))?;
            }
            checked += n;
        }

        let cols = label_columns(&ds);
        let row_labels = |r: usize, attrs: &[usize]| attrs.iter().map(|&a| cols[a][r].clone()).collect::<Vec<_>>();
        let count = |attrs: &[usize], r: usize| {
            let l = row_labels(r, attrs);
            joint_count(&cols, attrs, &l.iter().map(String::as_str).collect::<Vec<_>>(), n)
        };

        let p2 = DetectorParams { tau_rare: 0.02, c_rare: 2, ..DetectorParams::default() };
        let sv = detect_rare_class(&ds, &p2).map_err(|e| e.to_string())?;
        let flags = sv.flags.clone().unwrap_or_default();
        for r in 0..n {
            let counts: Vec<usize> = (0..cols.len()).map(|a| count(&[a], r)).collect();
            let score: f64 = counts.iter().map(|&c| -(c as f64 / n as f64).ln()).sum();
            ensure((sv.scores[r] - score).abs() <= 1e-12, || format!("type2 row {r}"))?;
            ensure(flags[r] == counts.iter().any(|&c| rare(c, n, &p2)), || format!("type2 flag row {r}"))?;
        }

        let p5 = DetectorParams { combo_order: 3, c_rare: 2, tau_rare: 0.005, ..DetectorParams::default() };
        let sv = detect_multidim_rare_class(&ds, &p5).map_err(|e| e.to_string())?;
        let flags = sv.flags.clone().unwrap_or_default();
        let detail = sv.detail.clone().unwrap_or_default();
        for r in 0..n {
            let mut score: f64 = 0.0;
            let mut order = 0;
            for s in attribute_subsets(cols.len(), 2, 3) {
                let c = count(&s, r);
                score = score.max(-(c as f64 / n as f64).ln());
                let common = s.iter().all(|&a| !rare(count(&[a], r), n, &p5));
                if c <= p5.c_rare && c < n && common && (order == 0 || s.len() < order) {
                    order = s.len();
                }
            }
            ensure((sv.scores[r] - score).abs() <= 1e-12, || format!("type5 row {r}"))?;
            ensure(flags[r] == (order > 0) && detail[r] as usize == order, || format!("type5 flag row {r}"))?;
        }

        let p6 = DetectorParams { k_nn: 10, combo_order: 3, g_min: 0.1, l_max: 0.1, ..DetectorParams::default() };
        let sv = detect_multidim_mixed(&ds, &p6).map_err(|e| e.to_string())?;
        let detail = sv.detail.clone().unwrap_or_default();
        for r in 0..n {
            let nb = nearest(&std, &std[r], p6.k_nn, Some(r));
            let mut score: f64 = 0.0;
            let mut order = 0;
            for s in attribute_subsets(cols.len(), 1, 3) {
                let global = count(&s, r) as f64 / n as f64;
                let hits = nb.iter().filter(|(j, _)| s.iter().all(|&a| cols[a][*j] == cols[a][r])).count();
                let local = hits as f64 / p6.k_nn as f64;
                score = score.max((global - local).max(0.0));
                if global >= p6.g_min && local <= p6.l_max && (order == 0 || s.len() < order) {
                    order = s.len();
                }
            }
            ensure((sv.scores[r] - score).abs() <= 1e-12, || format!("type6 row {r}"))?;
            ensure(detail[r] as usize == order, || format!("type6 order row {r}"))?;
        }
        checked += 3 * n;
    }
    Ok(format!("{checked} case scores equal their oracles"))
}

// ---------------------------------------------------------------- 5

fn hand_computed() -> Check {
    let schema = Schema::new(vec![Attribute::continuous("x")], None).map_err(|e| e.to_string())?;
    let rows = [1.0, 2.0, 3.0, 4.0, 100.0].iter().map(|&x| vec![Value::Num(x)]).collect();
    let ds = Dataset::from_rows(schema, rows).map_err(|e| e.to_string())?;
    let mad = detect_extreme_value(&ds, &DetectorParams::default()).map_err(|e| e.to_string())?;
    let expected = 97.0 / 1.4826;
    ensure((mad.scores[4] - expected).abs() <= 1e-6, || format!("mad score {}", mad.scores[4]))?;
    ensure(mad.flags.as_ref().is_some_and(|f| f[4]), || "mad score not flagged".into())?;
    let params = DetectorParams { method: ScaleMethod::ZScore, ..DetectorParams::default() };
    let sd = detect_extreme_value(&ds, &params).map_err(|e| e.to_string())?;
    ensure(sd.flags.as_ref().is_some_and(|f| !f[4]), || "sd score flagged".into())?;
    Ok(format!(
        "mad {:.6} flagged; sd {:.4} not flagged (population sd 39.01; the quoted 1.83 matches neither sd convention)",
        mad.scores[4], sd.scores[4]
    ))
}

// ---------------------------------------------------------------- 6

fn phase_sequence() -> Check {
    let tokens: Vec<String> = ["p1", "p2", "p3", "p1", "p2", "p3", "p1", "p3", "p1", "p2", "p3"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let seq = SymbolSequence::new(tokens, None).map_err(|e| e.to_string())?;
    let windows = windowize(&seq, 2).map_err(|e| e.to_string())?;
    let (s0, s1) = (windows.categorical(1), windows.categorical(2));
    let mut counts: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for (a, b) in s0.iter().zip(s1) {
        *counts.entry((a.as_str(), b.as_str())).or_default() += 1;
    }
    let expected: BTreeMap<(&str, &str), usize> =
        [(("p1", "p2"), 3), (("p2", "p3"), 3), (("p3", "p1"), 3), (("p1", "p3"), 1)].into();
    ensure(counts == expected, || format!("bigram counts {counts:?}"))?;
    let sv = detect_multidim_rare_class(&windows, &DetectorParams::default()).map_err(|e| e.to_string())?;
    let flagged: Vec<usize> = sv.flags.unwrap_or_default().iter().enumerate().filter(|(_, &f)| f).map(|(i, _)| i).collect();
    ensure(flagged == [6], || format!("flagged windows {flagged:?}"))?;
    Ok("bigrams 3/3/3/1; only window 6 (p1,p3) flagged".into())
}

// ---------------------------------------------------------------- 7

fn level_shift() -> Check {
    let (t0, magnitude) = (40usize, 5.0);
    let shifted = |noise: f64, seed: u64| -> Result<ScoreVector, String> {
        let spec = SeriesSpec { n: 120, slope: 0.0, amplitude: 0.0, period: 12, noise, seed };
        let series = generate_series(&spec).map_err(|e| e.to_string())?;
        let (modified, _, _) = inject_series_anomaly(&series, &SeriesAnomalyKind::LevelShift { t0, magnitude }, seed)
            .map_err(|e| e.to_string())?;
        let diffs = difference(&modified).map_err(|e| e.to_string())?;
        ensure(diffs.times()[t0 - 1] == t0 as f64, || "difference time alignment".into())?;
        detect_extreme_value(diffs.dataset(), &DetectorParams::default()).map_err(|e| e.to_string())
    };
    let clean = shifted(0.0, 0)?;
    let flagged: Vec<usize> = clean.flags.unwrap_or_default().iter().enumerate().filter(|(_, &f)| f).map(|(i, _)| i).collect();
    ensure(flagged == [t0 - 1], || format!("noise-free flags at rows {flagged:?}"))?;
    let mut runs = 0;
    for noise in [magnitude / 40.0, magnitude / 20.0, magnitude / 10.0] {
        for seed in 0..100 {
            let sv = shifted(noise, seed)?;
            let top = sv.scores[t0 - 1];
            let beaten = sv.scores.iter().enumerate().any(|(i, &s)| i != t0 - 1 && s >= top);
            ensure(!beaten, || format!("noise {noise}, seed {seed}: shift point is not the maximum"))?;
            runs += 1;
        }
    }
    Ok(format!("noise-free: only t={t0} flagged; maximum at t={t0} in {runs}/{runs} noisy runs"))
}

// ---------------------------------------------------------------- 8

fn shuffle_destruction() -> Check {
    let params = DetectorParams { k_nn: 10, epsilon: 0.02, standardize: false, ..DetectorParams::default() };
    // the region is present when injected cases make up at least half the flagged set
    let present = |ds: &Dataset, injected: &BTreeSet<CaseId>| -> Result<bool, String> {
        let sv = detect_multidim_numerical(ds, &params).map_err(|e| e.to_string())?;
        let flags = sv.flags.unwrap_or_default();
        let flagged: Vec<CaseId> = sv.case_ids.iter().zip(&flags).filter(|(_, &f)| f).map(|(c, _)| *c).collect();
        let hits = flagged.iter().filter(|c| injected.contains(c)).count();
        Ok(!flagged.is_empty() && 2 * hits >= flagged.len())
    };
    let (mut before, mut removed) = (0, 0);
    for seed in 0..100u64 {
        let spec = SeriesSpec { n: 400, slope: 0.0, amplitude: 5.0, period: 40, noise: 0.1, seed };
        let series = generate_series(&spec).map_err(|e| e.to_string())?;
        let (modified, truth, _) = inject_series_anomaly(&series, &SeriesAnomalyKind::DeviantCycle { cycle: 5 }, seed)
            .map_err(|e| e.to_string())?;
        let injected: BTreeSet<CaseId> = truth.entries.iter().map(|e| e.case_id).collect();
        if present(modified.dataset(), &injected)? {
            before += 1;
        }
        if !present(shuffle_series(&modified, seed).dataset(), &injected)? {
            removed += 1;
        }
    }
    ensure(removed >= 95, || format!("removed in {removed}/100 seeds"))?;
    Ok(format!("region present before shuffling in {before}/100, removed after in {removed}/100"))
}

// ---------------------------------------------------------------- 9

fn random_dataset() -> impl Strategy<Value = (Dataset, Vec<usize>)> {
    (12usize..40)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(-40i32..40, n),
                prop::collection::vec(-1000.0f64..1000.0, n),
                prop::collection::vec(0usize..3, n),
                prop::collection::vec(0usize..5, n),
                Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
            )
        })
        .prop_map(|(x, y, a, b, perm)| {
            let schema = Schema::new(
                vec![
                    Attribute::continuous("x"),
                    Attribute::categorical("a"),
                    Attribute::continuous("y"),
                    Attribute::categorical("b"),
                ],
                None,
            )
            .expect("valid schema");
            let columns = vec![
                Column::Continuous(x.iter().map(|&v| v as f64 / 4.0).collect()),
                Column::Categorical(a.iter().map(|&v| ["red", "green", "blue"][v].to_string()).collect()),
                Column::Continuous(y),
                Column::Categorical(b.iter().map(|&v| format!("l{v}")).collect()),
            ];
            let ids = (0..x.len() as u64).map(|i| CaseId(3 * i + 1)).collect();
            (Dataset::new(schema, ids, columns).expect("valid dataset"), perm)
        })
}

fn by_id(sv: &ScoreVector) -> HashMap<CaseId, (f64, bool)> {
    let flags = sv.flags.clone().unwrap_or_else(|| vec![false; sv.scores.len()]);
    sv.case_ids.iter().zip(sv.scores.iter().zip(flags)).map(|(c, (s, f))| (*c, (*s, f))).collect()
}

fn same_scores(a: &ScoreVector, b: &ScoreVector) -> Result<(), TestCaseError> {
    let (a, b) = (by_id(a), by_id(b));
    prop_assert_eq!(a.len(), b.len());
    for (id, (s, f)) in &a {
        let (t, g) = b[id];
        prop_assert!(close(*s, t, 1e-9), "case {}: {} vs {}", id, s, t);
        prop_assert_eq!(*f, g, "flag of case {}", id);
    }
    Ok(())
}

fn permute_column(ds: &Dataset, index: usize, perm: &[usize]) -> Dataset {
    let column = match ds.column(index) {
        Column::Continuous(v) => Column::Continuous(perm.iter().map(|&i| v[i]).collect()),
        Column::Categorical(v) => Column::Categorical(perm.iter().map(|&i| v[i].clone()).collect()),
    };
    ds.with_column(index, column).expect("same length")
}

fn invariance_suite() -> Check {
    const CASES: u32 = 128;
    let params = DetectorParams::default();
    // a runner counts successes across calls, so each property gets its own
    let run = |name: &str, test: &dyn Fn((Dataset, Vec<usize>)) -> Result<(), TestCaseError>| {
        let executed = Cell::new(0u32);
        let mut runner = TestRunner::new(Config { cases: CASES, failure_persistence: None, ..Config::default() });
        runner
            .run(&random_dataset(), |value| {
                executed.set(executed.get() + 1);
                test(value)
            })
            .map_err(|e| format!("{name}: {e}"))?;
        ensure(executed.get() >= CASES, || format!("{name}: only {} instances ran", executed.get()))
    };

    run("column independence", &|(ds, perm)| {
        let shuffled = permute_column(&permute_column(&ds, 2, &perm), 3, &perm);
        let (e0, e1) = (extreme_scores_by_attribute(&ds, &params), extreme_scores_by_attribute(&shuffled, &params));
        prop_assert_eq!(&e0[0], &e1[0]);
        let (r0, r1) = (rarity_scores_by_attribute(&ds), rarity_scores_by_attribute(&shuffled));
        prop_assert_eq!(&r0[0], &r1[0]);
        Ok(())
    })?;

    run("row permutation", &|(ds, perm)| {
        let moved = ds.reorder(&perm);
        for id in DETECTOR_IDS {
            let a = run_detector(id, &ds, &params).map_err(|e| TestCaseError::fail(e.to_string()))?;
            let b = run_detector(id, &moved, &params).map_err(|e| TestCaseError::fail(e.to_string()))?;
            same_scores(&a, &b)?;
        }
        Ok(())
    })?;

    run("affine invariance", &|(ds, perm)| {
        let a = [0.5, -2.0, 3.7, -0.25][perm[0] % 4];
        let b = perm[1] as f64 * 7.5 - 50.0;
        let mut moved = ds.clone();
        for c in ds.schema().continuous_indices() {
            let v = ds.continuous(c).iter().map(|x| a * x + b).collect();
            moved = moved.with_column(c, Column::Continuous(v)).expect("finite");
        }
        for id in ["type1", "type4"] {
            let s0 = run_detector(id, &ds, &params).map_err(|e| TestCaseError::fail(e.to_string()))?;
            let s1 = run_detector(id, &moved, &params).map_err(|e| TestCaseError::fail(e.to_string()))?;
            same_scores(&s0, &s1)?;
        }
        Ok(())
    })?;

    run("label renaming", &|(ds, perm)| {
        let mut renamed = ds.clone();
        for c in ds.schema().categorical_indices() {
            let v = ds.categorical(c).iter().map(|l| format!("{}#{}", l.chars().rev().collect::<String>(), perm.len())).collect();
            renamed = renamed.with_column(c, Column::Categorical(v)).expect("non-empty labels");
        }
        for id in ["type2", "type3", "type5", "type6"] {
            let s0 = run_detector(id, &ds, &params).map_err(|e| TestCaseError::fail(e.to_string()))?;
            let s1 = run_detector(id, &renamed, &params).map_err(|e| TestCaseError::fail(e.to_string()))?;
            same_scores(&s0, &s1)?;
        }
        Ok(())
    })?;

    run("monotone rank metrics", &|(ds, perm)| {
        let n = ds.len();
        let scores: Vec<f64> = perm.iter().map(|&p| (p % 7) as f64 - 2.0).collect();
        let entries = (0..n)
            .filter(|&i| perm[i] % 3 == 0)
            .map(|i| TruthEntry {
                case_id: ds.case_ids()[i],
                anomaly: if perm[i] % 2 == 0 { AnomalyType::ExtremeValue } else { AnomalyType::MultidimNumerical },
                attributes: vec![],
                order: None,
                params: serde_json::Value::Null,
            })
            .collect();
        let truth = GroundTruth { thresholds: None, entries };
        let sv = |s: Vec<f64>| ScoreVector {
            detector_id: "external".into(),
            case_ids: ds.case_ids().to_vec(),
            scores: s,
            flags: None,
            detail: None,
            params: None,
        };
        let plain = evaluate_scores(&sv(scores.clone()), &truth, &ds).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let bent: Vec<f64> = scores.iter().map(|s| s * s * s + 3.0 * s + 1.0).collect();
        let moved = evaluate_scores(&sv(bent), &truth, &ds).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(plain.len(), moved.len());
        for (p, m) in plain.iter().zip(&moved) {
            prop_assert!(close(p.rank_auc, m.rank_auc, 1e-9));
            prop_assert!(close(p.recall_at_k, m.recall_at_k, 1e-9));
        }
        Ok(())
    })?;

    Ok(format!("5 properties x {CASES} random instances"))
}

// ---------------------------------------------------------------- 10

fn pipeline(dir: &Path) -> Result<(), String> {
    let steps: [&[&str]; 12] = [
        &["generate", "--reference", "--count", "3", "--seed", "11", "-o", "bench"],
        &["detect", "--data", "bench/data.csv", "--detector", "all", "-o", "scores"],
        &["detect", "--data", "bench/data.csv", "--detector", "all", "--format", "json", "-o", "scores_json"],
        &["classify", "--data", "bench/data.csv", "--truth", "bench/truth.json", "-o", "classes"],
        &["classify", "--data", "bench/data.csv", "--truth", "bench/truth.json", "--format", "csv", "-o", "classes"],
        &["evaluate", "--data", "bench/data.csv", "--truth", "bench/truth.json", "--format", "csv", "-o", "eval"],
        &["report", "--report", "eval/report.json", "-o", "eval"],
        &["plot", "--data", "bench/data.csv", "--x", "x", "--y", "y", "--class", "color", "--truth", "bench/truth.json", "-o", "plot"],
        &["generate", "--series", "series.json", "-o", "series"],
        &["inject", "--data", "series/data.csv", "--series-anomaly", "shift.json", "-o", "shifted"],
        &["transform", "--op", "difference", "--data", "shifted/data.csv", "-o", "diffs"],
        &["detect", "--data", "diffs/data.csv", "--detector", "type1", "-o", "diffs"],
    ];
    fs::write(dir.join("series.json"), r#"{"n": 96, "amplitude": 2.0, "period": 12, "noise": 0.2, "seed": 3}"#)
        .map_err(|e| e.to_string())?;
    fs::write(dir.join("shift.json"), r#"{"kind": "level_shift", "t0": 50, "magnitude": 4.0}"#).map_err(|e| e.to_string())?;
    for args in steps {
        let out = Command::new(env!("CARGO_BIN_EXE_anomtype"))
            .args(args)
            .current_dir(dir)
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!("`{}` failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)));
        }
    }
    Ok(())
}

fn files(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).expect("readable dir").flatten() {
            let path = entry.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push(path.strip_prefix(root).expect("under root").to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn end_to_end() -> Check {
    let (a, b) = (tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?);
    pipeline(a.path())?;
    pipeline(b.path())?;
    let (fa, fb) = (files(a.path()), files(b.path()));
    ensure(fa == fb, || "the runs wrote different file sets".into())?;
    let mut kinds: BTreeMap<String, usize> = BTreeMap::new();
    for f in &fa {
        let same = fs::read(a.path().join(f)).ok() == fs::read(b.path().join(f)).ok();
        ensure(same, || format!("{} differs between runs", f.display()))?;
        *kinds.entry(f.extension().map_or(String::new(), |e| e.to_string_lossy().into_owned())).or_default() += 1;
    }
    for ext in ["csv", "json", "svg"] {
        ensure(kinds.contains_key(ext), || format!("no {ext} artifact produced"))?;
    }
    let summary: Vec<String> = kinds.iter().map(|(k, v)| format!("{v} {k}")).collect();
    Ok(format!("{} artifacts byte-identical ({})", fa.len(), summary.join(", ")))
}
