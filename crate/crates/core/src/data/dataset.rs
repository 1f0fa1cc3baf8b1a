use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{AttributeKind, DataError, Schema};

/// Stable case identifier. Ground truth, scores and attributions are keyed by
/// it, never by row position.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct CaseId(pub u64);

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Label(String),
}

impl Value {
    pub fn as_num(&self) -> Option<f64> {
        match self {
            Value::Num(x) => Some(*x),
            Value::Label(_) => None,
        }
    }

    pub fn as_label(&self) -> Option<&str> {
        match self {
            Value::Label(s) => Some(s),
            Value::Num(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Continuous(Vec<f64>),
    Categorical(Vec<String>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Continuous(v) => v.len(),
            Column::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> AttributeKind {
        match self {
            Column::Continuous(_) => AttributeKind::Continuous,
            Column::Categorical(_) => AttributeKind::Categorical,
        }
    }

    fn value(&self, row: usize) -> Value {
        match self {
            Column::Continuous(v) => Value::Num(v[row]),
            Column::Categorical(v) => Value::Label(v[row].clone()),
        }
    }

    fn push(&mut self, value: Value) {
        match (self, value) {
            (Column::Continuous(v), Value::Num(x)) => v.push(x),
            (Column::Categorical(v), Value::Label(s)) => v.push(s),
            _ => unreachable!("value kind checked before push"),
        }
    }
}

/// Immutable rectangular collection of cases, stored column-wise.
///
/// Continuous values are finite and categorical values are non-empty labels;
/// case ids are unique.
#[derive(Debug, Clone)]
pub struct Dataset {
    schema: Schema,
    case_ids: Vec<CaseId>,
    columns: Vec<Column>,
    positions: HashMap<CaseId, usize>,
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.schema == other.schema
            && self.case_ids == other.case_ids
            && self.columns == other.columns
    }
}

impl Dataset {
    pub fn new(schema: Schema, case_ids: Vec<CaseId>, columns: Vec<Column>) -> Result<Self, DataError> {
        if columns.len() != schema.len() {
            return Err(DataError::Shape(format!(
                "{} columns for a schema of {} attributes",
                columns.len(),
                schema.len()
            )));
        }
        let n = case_ids.len();
        for (index, column) in columns.iter().enumerate() {
            let name = schema.name(index);
            if column.kind() != schema.kind(index) {
                return Err(DataError::Shape(format!(
                    "column {name:?} holds {} values but is declared {}",
                    column.kind(),
                    schema.kind(index)
                )));
            }
            if column.len() != n {
                return Err(DataError::Shape(format!(
                    "column {name:?} has {} values, expected {n}",
                    column.len()
                )));
            }
            match column {
                Column::Continuous(values) => {
                    if let Some(row) = values.iter().position(|x| !x.is_finite()) {
                        return Err(DataError::NonFinite { row: row + 1, column: name.to_string() });
                    }
                }
                Column::Categorical(labels) => {
                    if let Some(row) = labels.iter().position(|s| s.is_empty()) {
                        return Err(DataError::Missing { row: row + 1, column: name.to_string() });
                    }
                }
            }
        }
        let mut positions = HashMap::with_capacity(n);
        for (row, id) in case_ids.iter().enumerate() {
            if positions.insert(*id, row).is_some() {
                return Err(DataError::DuplicateCaseId(*id));
            }
        }
        Ok(Dataset { schema, case_ids, columns, positions })
    }

    /// Builds a dataset from positional rows, assigning case ids `0..n`.
    pub fn from_rows(schema: Schema, rows: Vec<Vec<Value>>) -> Result<Self, DataError> {
        let ids = (0..rows.len() as u64).map(CaseId).collect();
        Self::from_rows_with_ids(schema, ids, rows)
    }

    pub fn from_rows_with_ids(
        schema: Schema,
        case_ids: Vec<CaseId>,
        rows: Vec<Vec<Value>>,
    ) -> Result<Self, DataError> {
        if case_ids.len() != rows.len() {
            return Err(DataError::Shape(format!(
                "{} case ids for {} rows",
                case_ids.len(),
                rows.len()
            )));
        }
        let mut columns: Vec<Column> = schema
            .attributes()
            .iter()
            .map(|a| match a.kind {
                AttributeKind::Continuous => Column::Continuous(Vec::with_capacity(rows.len())),
                AttributeKind::Categorical => Column::Categorical(Vec::with_capacity(rows.len())),
            })
            .collect();
        for (r, row) in rows.into_iter().enumerate() {
            push_row(&schema, &mut columns, row, r + 1)?;
        }
        Dataset::new(schema, case_ids, columns)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.case_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.case_ids.is_empty()
    }

    pub fn case_ids(&self) -> &[CaseId] {
        &self.case_ids
    }

    pub fn position(&self, id: CaseId) -> Option<usize> {
        self.positions.get(&id).copied()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, index: usize) -> &Column {
        &self.columns[index]
    }

    /// Values of a continuous attribute. Panics on a categorical index.
    pub fn continuous(&self, index: usize) -> &[f64] {
        match &self.columns[index] {
            Column::Continuous(v) => v,
            Column::Categorical(_) => panic!("attribute {} is categorical", self.schema.name(index)),
        }
    }

    /// Labels of a categorical attribute. Panics on a continuous index.
    pub fn categorical(&self, index: usize) -> &[String] {
        match &self.columns[index] {
            Column::Categorical(v) => v,
            Column::Continuous(_) => panic!("attribute {} is continuous", self.schema.name(index)),
        }
    }

    pub fn row(&self, row: usize) -> Vec<Value> {
        self.columns.iter().map(|c| c.value(row)).collect()
    }

    pub fn next_case_id(&self) -> CaseId {
        CaseId(self.case_ids.iter().map(|c| c.0 + 1).max().unwrap_or(0))
    }

    /// Returns a new dataset with `rows` appended under the given ids; the
    /// existing cases are carried over unchanged.
    pub fn append(&self, ids: &[CaseId], rows: Vec<Vec<Value>>) -> Result<Dataset, DataError> {
        if ids.len() != rows.len() {
            return Err(DataError::Shape(format!("{} case ids for {} rows", ids.len(), rows.len())));
        }
        let mut columns = self.columns.clone();
        for (r, row) in rows.into_iter().enumerate() {
            push_row(&self.schema, &mut columns, row, self.len() + r + 1)?;
        }
        let mut case_ids = self.case_ids.clone();
        case_ids.extend_from_slice(ids);
        Dataset::new(self.schema.clone(), case_ids, columns)
    }

    /// Reorders rows so that output row `i` is input row `order[i]`. Case ids
    /// travel with their rows.
    pub fn reorder(&self, order: &[usize]) -> Dataset {
        assert_eq!(order.len(), self.len(), "reorder needs a full permutation");
        let columns = self
            .columns
            .iter()
            .map(|c| match c {
                Column::Continuous(v) => Column::Continuous(order.iter().map(|&i| v[i]).collect()),
                Column::Categorical(v) => {
                    Column::Categorical(order.iter().map(|&i| v[i].clone()).collect())
                }
            })
            .collect();
        let case_ids = order.iter().map(|&i| self.case_ids[i]).collect();
        Dataset::new(self.schema.clone(), case_ids, columns).expect("permutation keeps dataset valid")
    }

    /// Replaces one column, keeping schema kind and length.
    pub fn with_column(&self, index: usize, column: Column) -> Result<Dataset, DataError> {
        let mut columns = self.columns.clone();
        columns[index] = column;
        Dataset::new(self.schema.clone(), self.case_ids.clone(), columns)
    }
}

fn push_row(schema: &Schema, columns: &mut [Column], row: Vec<Value>, row_number: usize) -> Result<(), DataError> {
    if row.len() != schema.len() {
        return Err(DataError::Ragged { row: row_number, expected: schema.len(), found: row.len() });
    }
    for (index, value) in row.iter().enumerate() {
        let kind_ok = matches!(
            (schema.kind(index), value),
            (AttributeKind::Continuous, Value::Num(_)) | (AttributeKind::Categorical, Value::Label(_))
        );
        if !kind_ok {
            return Err(DataError::Shape(format!(
                "row {row_number}: value for {:?} does not match its kind",
                schema.name(index)
            )));
        }
    }
    for (column, value) in columns.iter_mut().zip(row) {
        column.push(value);
    }
    Ok(())
}
