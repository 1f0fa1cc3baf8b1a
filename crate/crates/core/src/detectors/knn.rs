//! Exhaustive k-nearest-neighbor search over continuous attributes.
//!
//! Distances are Euclidean; ties are broken by ascending case id so that
//! neighbor sets are deterministic.

use rayon::prelude::*;

use crate::data::{quantile_sorted, ColumnScale, Dataset, ScaleMethod};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

/// Row-major point matrix with one tie-break key (the case id) per point.
#[derive(Debug, Clone)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
    keys: Vec<u64>,
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

impl PointSet {
    pub fn new(dim: usize, coords: Vec<f64>, keys: Vec<u64>) -> PointSet {
        assert!(dim > 0 && coords.len() == dim * keys.len(), "coordinate buffer does not match point count");
        PointSet { dim, coords, keys }
    }

    /// Continuous attributes of `dataset`, robust-standardized when
    /// `standardize` is set. Returns the points and the per-attribute scales
    /// (identity scales when not standardizing).
    pub fn from_dataset(dataset: &Dataset, standardize: bool) -> (PointSet, Vec<ColumnScale>) {
        let attrs = dataset.schema().continuous_indices();
        let scales: Vec<ColumnScale> = attrs
            .iter()
            .map(|&a| {
                if standardize {
                    ColumnScale::compute(dataset.continuous(a), ScaleMethod::Robust)
                } else {
                    ColumnScale { center: 0.0, scale: 1.0 }
                }
            })
            .collect();
        let n = dataset.len();
        let dim = attrs.len();
        let mut coords = Vec::with_capacity(n * dim);
        for row in 0..n {
            for (&a, scale) in attrs.iter().zip(&scales) {
                coords.push(transform(dataset.continuous(a)[row], scale, standardize));
            }
        }
        let keys = dataset.case_ids().iter().map(|c| c.0).collect();
        (PointSet::new(dim.max(1), coords, keys), scales)
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// The `k` nearest points to `query`, closest first, skipping `exclude`.
    pub fn nearest(&self, query: &[f64], k: usize, exclude: Option<usize>) -> Vec<Neighbor> {
        let mut best: Vec<(f64, u64, usize)> = Vec::with_capacity(k + 1);
        for i in 0..self.len() {
            if Some(i) == exclude {
                continue;
            }
            let d = euclidean(query, self.point(i));
            let key = self.keys[i];
            if best.len() == k {
                let (ld, lk, _) = best[k - 1];
                if d > ld || (d == ld && key > lk) {
                    continue;
                }
            }
            let at = best.partition_point(|&(bd, bk, _)| bd < d || (bd == d && bk < key));
            best.insert(at, (d, key, i));
            best.truncate(k);
        }
        best.into_iter().map(|(distance, _, index)| Neighbor { index, distance }).collect()
    }

    /// Neighbor lists of every point (excluding itself), in point order.
    pub fn neighbor_lists(&self, k: usize) -> Vec<Vec<Neighbor>> {
        (0..self.len()).into_par_iter().map(|i| self.nearest(self.point(i), k, Some(i))).collect()
    }
}

pub(crate) fn transform(x: f64, scale: &ColumnScale, standardize: bool) -> f64 {
    if standardize {
        scale.standardize(x)
    } else {
        x
    }
}

/// Mean distance to the listed neighbors.
pub fn mean_distance(neighbors: &[Neighbor]) -> f64 {
    if neighbors.is_empty() {
        return 0.0;
    }
    neighbors.iter().map(|n| n.distance).sum::<f64>() / neighbors.len() as f64
}

/// Mean distance from each point to its `k` nearest other points.
pub fn knn_scores(points: &PointSet, k: usize) -> Vec<f64> {
    points.neighbor_lists(k).iter().map(|nb| mean_distance(nb)).collect()
}

/// The `1 - epsilon` empirical quantile of `scores` (linear interpolation).
pub fn upper_quantile(scores: &[f64], epsilon: f64) -> f64 {
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_sorted(&sorted, 1.0 - epsilon)
}
