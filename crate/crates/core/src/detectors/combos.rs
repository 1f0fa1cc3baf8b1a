//! Joint label counting over subsets of categorical attributes.

use std::collections::HashMap;

use crate::data::Dataset;

/// All subsets of `0..m` with sizes in `min..=max`, by size then lexicographically.
pub fn subsets(m: usize, min: usize, max: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for size in min.max(1)..=max.min(m) {
        let mut current = Vec::with_capacity(size);
        extend(0, m, size, &mut current, &mut out);
    }
    out
}

fn extend(start: usize, m: usize, size: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if current.len() == size {
        out.push(current.clone());
        return;
    }
    for i in start..m {
        current.push(i);
        extend(i + 1, m, size, current, out);
        current.pop();
    }
}

/// Counts of label tuples for every categorical subset up to a maximum size.
///
/// Subsets are expressed as positions into `categorical` (the schema indices
/// of the categorical attributes); the singletons come first, so position
/// `p` of a size-1 subset is at `subsets[p]`.
#[derive(Debug, Clone)]
pub struct TupleTable<'a> {
    pub categorical: Vec<usize>,
    pub subsets: Vec<Vec<usize>>,
    counts: Vec<HashMap<Vec<&'a str>, usize>>,
    labels: Vec<&'a [String]>,
    n: usize,
}

impl<'a> TupleTable<'a> {
    pub fn new(dataset: &'a Dataset, max_order: usize) -> TupleTable<'a> {
        let categorical = dataset.schema().categorical_indices();
        let labels: Vec<&[String]> = categorical.iter().map(|&a| dataset.categorical(a)).collect();
        let subsets = subsets(categorical.len(), 1, max_order);
        let n = dataset.len();
        let counts = subsets
            .iter()
            .map(|subset| {
                let mut map: HashMap<Vec<&str>, usize> = HashMap::new();
                for row in 0..n {
                    let key = subset.iter().map(|&p| labels[p][row].as_str()).collect();
                    *map.entry(key).or_default() += 1;
                }
                map
            })
            .collect();
        TupleTable { categorical, subsets, counts, labels, n }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Label of categorical position `pos` at `row`.
    pub fn label(&self, pos: usize, row: usize) -> &'a str {
        &self.labels[pos][row]
    }

    /// Labels of `row` in categorical-position order.
    pub fn row_labels(&self, row: usize) -> Vec<&'a str> {
        (0..self.categorical.len()).map(|p| self.label(p, row)).collect()
    }

    /// Count of the tuple that `labels` (indexed by categorical position) takes on subset `s`.
    pub fn count(&self, s: usize, labels: &[&str]) -> usize {
        let key: Vec<&str> = self.subsets[s].iter().map(|&p| labels[p]).collect();
        self.counts[s].get(&key).copied().unwrap_or(0)
    }

    /// Whether `row` agrees with `labels` on every attribute of subset `s`.
    pub fn matches(&self, s: usize, row: usize, labels: &[&str]) -> bool {
        self.subsets[s].iter().all(|&p| self.label(p, row) == labels[p])
    }

    /// Distinct tuples observed on subset `s`, sorted, with their counts.
    pub fn tuples(&self, s: usize) -> Vec<(Vec<&'a str>, usize)> {
        let mut all: Vec<(Vec<&str>, usize)> = self.counts[s].iter().map(|(k, v)| (k.clone(), *v)).collect();
        all.sort();
        all
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subset_enumeration() {
        assert_eq!(subsets(3, 2, 2), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(subsets(3, 1, 3).len(), 7);
        assert!(subsets(1, 2, 3).is_empty());
    }
}
