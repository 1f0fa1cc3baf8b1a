//! The six-type anomaly grid, per-type properties, case classification and
//! the mapping of external typology labels onto the grid.

mod classify;
mod external;
mod types;

use thiserror::Error;

use crate::data::CaseId;

pub use classify::{
    classify_case, Assessment, ClassificationParams, Classifier, Evidence, Profile, TypeAttribution,
};
pub use external::{map_external, ExternalKind, ExternalSource, ExternalTypeLabel, MappingContext};
pub use types::{
    grid_cell, locality, type_properties, AnomalyType, Cardinality, DataKinds, Locality, Term,
    TypeProperties, UnknownType,
};

#[derive(Debug, Error, PartialEq)]
pub enum TaxonomyError {
    #[error("unknown typology source {0:?} (expected chandola or kaiser)")]
    UnknownSource(String),
    #[error("{label:?} is not in the {vocabulary:?} vocabulary")]
    UnknownLabel { vocabulary: ExternalSource, label: String },
    #[error("{} anomalies need dependent data", .0.as_str())]
    NeedsDependentData(ExternalKind),
    #[error("case id {0} is not part of the dataset")]
    UnknownCase(CaseId),
    #[error("invalid classification parameters: {0}")]
    InvalidParams(String),
}
