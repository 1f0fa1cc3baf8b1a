use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SequenceError;
use crate::data::{Attribute, AttributeKind, CaseId, Column, Dataset, Schema};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    Mean,
    Min,
    Max,
    Count,
    /// Most frequent value; ties go to the smallest.
    Mode,
}

impl Aggregation {
    pub fn as_str(self) -> &'static str {
        match self {
            Aggregation::Mean => "mean",
            Aggregation::Min => "min",
            Aggregation::Max => "max",
            Aggregation::Count => "count",
            Aggregation::Mode => "mode",
        }
    }
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Aggregation {
    type Err = SequenceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mean" => Ok(Aggregation::Mean),
            "min" => Ok(Aggregation::Min),
            "max" => Ok(Aggregation::Max),
            "count" => Ok(Aggregation::Count),
            "mode" => Ok(Aggregation::Mode),
            _ => Err(SequenceError::InvalidParams(format!("unknown aggregation {s:?}"))),
        }
    }
}

fn mode_of<T: Ord + Clone>(items: impl Iterator<Item = T>) -> T {
    let mut sorted: Vec<T> = items.collect();
    sorted.sort();
    let mut best = (sorted[0].clone(), 0);
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|x| **x == sorted[i]).count();
        if j > best.1 {
            best = (sorted[i].clone(), j);
        }
        i += j;
    }
    best.0
}

/// Ordered float key for grouping and mode.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Total(f64);

impl Eq for Total {}

impl PartialOrd for Total {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Total {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// One case per distinct value of `key` (in order of first appearance) with
/// one attribute `<attribute>_<aggregation>` per requested aggregation.
pub fn aggregate_by(dataset: &Dataset, key: &str, aggregations: &[(String, Aggregation)]) -> Result<Dataset, SequenceError> {
    let schema = dataset.schema();
    let key_index = schema.index_of(key).ok_or_else(|| SequenceError::UnknownAttribute(key.to_string()))?;
    let mut resolved = Vec::with_capacity(aggregations.len());
    for (name, agg) in aggregations {
        let index = schema.index_of(name).ok_or_else(|| SequenceError::UnknownAttribute(name.clone()))?;
        let kind = schema.kind(index);
        if kind == AttributeKind::Categorical && matches!(agg, Aggregation::Mean | Aggregation::Min | Aggregation::Max) {
            return Err(SequenceError::InvalidParams(format!("{agg} is not defined for categorical attribute {name:?}")));
        }
        resolved.push((index, *agg));
    }

    let group_key = |row: usize| -> String {
        match dataset.column(key_index) {
            Column::Continuous(v) => format!("{:016x}", v[row].to_bits()),
            Column::Categorical(v) => v[row].clone(),
        }
    };
    let mut order: Vec<usize> = Vec::new();
    let mut groups: HashMap<String, Vec<usize>> = HashMap::new();
    for row in 0..dataset.len() {
        let rows = groups.entry(group_key(row)).or_default();
        if rows.is_empty() {
            order.push(row);
        }
        rows.push(row);
    }
    let members: Vec<&Vec<usize>> = order.iter().map(|&r| &groups[&group_key(r)]).collect();

    let mut attributes = vec![schema.attributes()[key_index].clone()];
    let mut columns = vec![match dataset.column(key_index) {
        Column::Continuous(v) => Column::Continuous(order.iter().map(|&r| v[r]).collect()),
        Column::Categorical(v) => Column::Categorical(order.iter().map(|&r| v[r].clone()).collect()),
    }];
    for (index, agg) in resolved {
        let name = format!("{}_{}", schema.name(index), agg);
        let column = match (dataset.column(index), agg) {
            (_, Aggregation::Count) => Column::Continuous(members.iter().map(|m| m.len() as f64).collect()),
            (Column::Continuous(v), Aggregation::Mean) => {
                Column::Continuous(members.iter().map(|m| m.iter().map(|&r| v[r]).sum::<f64>() / m.len() as f64).collect())
            }
            (Column::Continuous(v), Aggregation::Min) => {
                Column::Continuous(members.iter().map(|m| m.iter().map(|&r| v[r]).fold(f64::INFINITY, f64::min)).collect())
            }
            (Column::Continuous(v), Aggregation::Max) => {
                Column::Continuous(members.iter().map(|m| m.iter().map(|&r| v[r]).fold(f64::NEG_INFINITY, f64::max)).collect())
            }
            (Column::Continuous(v), Aggregation::Mode) => {
                Column::Continuous(members.iter().map(|m| mode_of(m.iter().map(|&r| Total(v[r]))).0).collect())
            }
            (Column::Categorical(v), Aggregation::Mode) => {
                Column::Categorical(members.iter().map(|m| mode_of(m.iter().map(|&r| v[r].clone()))).collect())
            }
            (Column::Categorical(_), _) => unreachable!("rejected above"),
        };
        attributes.push(Attribute { name, kind: column.kind() });
        columns.push(column);
    }
    let schema = Schema::new(attributes, None)?;
    Ok(Dataset::new(schema, (0..order.len() as u64).map(CaseId).collect(), columns)?)
}
