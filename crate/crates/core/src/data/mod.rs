//! Dataset representation: schema, validated column storage, CSV and schema
//! sidecar I/O, marginal statistics and standardization.

mod dataset;
mod io;
mod schema;
mod stats;

use thiserror::Error;

pub use dataset::{CaseId, Column, Dataset, Value};
pub use io::{format_exact, load_dataset, write_dataset};
pub use schema::{Attribute, AttributeKind, Schema};
pub use stats::{
    categorical_stats, continuous_stats, marginal_stats, median_sorted, quantile_sorted, raw_mad,
    standardize, AttributeStats, CategoricalStats, ColumnScale, ContinuousStats, LabelCount,
    MarginalStats, ScaleMethod, MAD_SCALE,
};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("header mismatch: expected attributes {expected:?}, found {found:?}")]
    HeaderMismatch { expected: Vec<String>, found: Vec<String> },
    #[error("row {row}: expected {expected} fields, found {found}")]
    Ragged { row: usize, expected: usize, found: usize },
    #[error("row {row}, column {column:?}: {token:?} is not a number")]
    NotNumeric { row: usize, column: String, token: String },
    #[error("row {row}, column {column:?}: value is not finite")]
    NonFinite { row: usize, column: String },
    #[error("row {row}, column {column:?}: missing value")]
    Missing { row: usize, column: String },
    #[error("duplicate case id {0}")]
    DuplicateCaseId(CaseId),
    #[error("dataset has no continuous attributes")]
    NoContinuous,
    #[error("shape error: {0}")]
    Shape(String),
    #[error("csv: {0}")]
    Csv(String),
}
