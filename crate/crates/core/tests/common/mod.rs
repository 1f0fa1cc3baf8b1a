#![allow(dead_code)]

use anomtype::data::{Attribute, Dataset, Schema, Value};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Two noisy clusters over `x, y, z` plus three skewed categorical columns.
pub fn mixed(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let schema = Schema::new(
        vec![
            Attribute::continuous("x"),
            Attribute::continuous("y"),
            Attribute::continuous("z"),
            Attribute::categorical("a"),
            Attribute::categorical("b"),
            Attribute::categorical("c"),
        ],
        None,
    )
    .unwrap();
    let pick = |rng: &mut ChaCha8Rng, labels: &[&str], weights: &[f64]| {
        let mut u: f64 = rng.random();
        for (l, w) in labels.iter().zip(weights) {
            if u < *w {
                return l.to_string();
            }
            u -= w;
        }
        labels[labels.len() - 1].to_string()
    };
    let rows = (0..n)
        .map(|_| {
            let shift = if rng.random_bool(0.5) { 3.0 } else { -3.0 };
            let mut row: Vec<Value> =
                (0..3).map(|_| Value::Num(shift + rng.random_range(-1.5..1.5) * rng.random_range(0.2..1.0))).collect();
            row.push(Value::Label(pick(&mut rng, &["p", "q", "r"], &[0.6, 0.35, 0.05])));
            row.push(Value::Label(if shift > 0.0 { "hi" } else { "lo" }.to_string()));
            row.push(Value::Label(pick(&mut rng, &["s", "t", "u", "v"], &[0.45, 0.45, 0.09, 0.01])));
            row
        })
        .collect();
    Dataset::from_rows(schema, rows).unwrap()
}

/// Continuous-only points with integer-ish coordinates, so ties occur.
pub fn points(n: usize, dim: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let schema = Schema::new((0..dim).map(|d| Attribute::continuous(format!("x{d}"))).collect(), None).unwrap();
    let rows = (0..n)
        .map(|_| (0..dim).map(|_| Value::Num(rng.random_range(0..40) as f64 / 4.0 + rng.random_range(0..2) as f64 * 0.001)).collect())
        .collect();
    Dataset::from_rows(schema, rows).unwrap()
}

pub fn assert_close(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        assert!((x - y).abs() <= tol * x.abs().max(1.0), "row {i}: {x} vs {y}");
    }
}
