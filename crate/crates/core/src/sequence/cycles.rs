use super::series::Series;
use super::SequenceError;
use crate::data::{median_sorted, Attribute, CaseId, Column, Dataset, Schema};
use crate::detectors::knn::euclidean;

/// Cycle-level view of a series: one case per complete cycle with its
/// summary features and a shape class.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleSegmentation {
    pub dataset: Dataset,
    /// Mean-centered cycle vectors, one per case.
    pub shapes: Vec<Vec<f64>>,
    /// Centroid per class, indexed like the class labels `c0, c1, ...`.
    pub centroids: Vec<Vec<f64>>,
    pub cutoff: f64,
}

/// Default class cutoff: three times the median distance of the cycle shapes
/// to their element-wise median shape.
pub fn default_cutoff(shapes: &[Vec<f64>]) -> f64 {
    if shapes.is_empty() {
        return 0.0;
    }
    let p = shapes[0].len();
    let median_shape: Vec<f64> = (0..p)
        .map(|j| {
            let mut col: Vec<f64> = shapes.iter().map(|s| s[j]).collect();
            col.sort_by(f64::total_cmp);
            median_sorted(&col)
        })
        .collect();
    let mut d: Vec<f64> = shapes.iter().map(|s| euclidean(s, &median_shape)).collect();
    d.sort_by(f64::total_cmp);
    3.0 * median_sorted(&d)
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = euclidean(point, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn mean_of(members: &[&Vec<f64>]) -> Vec<f64> {
    let p = members[0].len();
    (0..p).map(|j| members.iter().map(|m| m[j]).sum::<f64>() / members.len() as f64).collect()
}

/// Leader clustering (a cycle farther than `cutoff` from every centroid
/// opens a new class) followed by nearest-centroid refinement until the
/// assignment is stable. Classes are numbered by first appearance.
pub fn classify_shapes(shapes: &[Vec<f64>], cutoff: f64) -> (Vec<usize>, Vec<Vec<f64>>) {
    let mut centroids: Vec<Vec<f64>> = Vec::new();
    let mut members: Vec<Vec<&Vec<f64>>> = Vec::new();
    let mut assign = Vec::with_capacity(shapes.len());
    for s in shapes {
        let (i, d) = nearest(s, &centroids);
        if d <= cutoff {
            members[i].push(s);
            centroids[i] = mean_of(&members[i]);
            assign.push(i);
        } else {
            centroids.push(s.clone());
            members.push(vec![s]);
            assign.push(centroids.len() - 1);
        }
    }
    for _ in 0..100 {
        let next: Vec<usize> = shapes.iter().map(|s| nearest(s, &centroids).0).collect();
        let stable = next == assign;
        assign = next;
        // renumber by first appearance, dropping empty classes
        let mut map = vec![usize::MAX; centroids.len()];
        let mut k = 0;
        for a in &mut assign {
            if map[*a] == usize::MAX {
                map[*a] = k;
                k += 1;
            }
            *a = map[*a];
        }
        centroids = (0..k)
            .map(|c| mean_of(&shapes.iter().zip(&assign).filter(|(_, &a)| a == c).map(|(s, _)| s).collect::<Vec<_>>()))
            .collect();
        if stable {
            break;
        }
    }
    (assign, centroids)
}

/// One case per complete cycle with attributes `cycle`, `mean`, `min`,
/// `max`, `amplitude` and the shape class `class`.
pub fn segment_cycles(series: &Series, period: usize, cutoff: Option<f64>) -> Result<CycleSegmentation, SequenceError> {
    if period < 2 {
        return Err(SequenceError::InvalidParams(format!("period must be >= 2, got {period}")));
    }
    if period > series.len() {
        return Err(SequenceError::InvalidParams(format!("period {period} exceeds the series length {}", series.len())));
    }
    let cycles: Vec<&[f64]> = series.values().chunks_exact(period).collect();
    let means: Vec<f64> = cycles.iter().map(|c| c.iter().sum::<f64>() / period as f64).collect();
    let shapes: Vec<Vec<f64>> = cycles.iter().zip(&means).map(|(c, m)| c.iter().map(|x| x - m).collect()).collect();
    let cutoff = cutoff.unwrap_or_else(|| default_cutoff(&shapes));
    let (assign, centroids) = classify_shapes(&shapes, cutoff);
    let mins: Vec<f64> = cycles.iter().map(|c| c.iter().copied().fold(f64::INFINITY, f64::min)).collect();
    let maxs: Vec<f64> = cycles.iter().map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect();
    let schema = Schema::new(
        vec![
            Attribute::continuous("cycle"),
            Attribute::continuous("mean"),
            Attribute::continuous("min"),
            Attribute::continuous("max"),
            Attribute::continuous("amplitude"),
            Attribute::categorical("class"),
        ],
        Some("cycle".into()),
    )?;
    let columns = vec![
        Column::Continuous((0..cycles.len()).map(|i| i as f64).collect()),
        Column::Continuous(means),
        Column::Continuous(mins.clone()),
        Column::Continuous(maxs.clone()),
        Column::Continuous(maxs.iter().zip(&mins).map(|(a, b)| a - b).collect()),
        Column::Categorical(assign.iter().map(|a| format!("c{a}")).collect()),
    ];
    let ids = (0..cycles.len() as u64).map(CaseId).collect();
    let dataset = Dataset::new(schema, ids, columns)?;
    Ok(CycleSegmentation { dataset, shapes, centroids, cutoff })
}
