//! Dependent data: series and symbol-sequence generators, within-series
//! anomalies, and transforms that move anomalies to another conceptual
//! level (differencing, cycle segmentation, windowing, aggregation).

mod aggregate;
mod cycles;
mod series;
mod symbols;

use thiserror::Error;

pub use aggregate::{aggregate_by, Aggregation};
pub use cycles::{classify_shapes, default_cutoff, segment_cycles, CycleSegmentation};
pub use series::{
    cumulative_sum, difference, generate_series, inject_series_anomaly, shuffle_series, Series, SeriesAnomalyKind,
    SeriesSpec, TIME, TRANSITORY_CUTOFF, VALUE,
};
pub use symbols::{load_symbols, windowize, SymbolSequence};

use crate::data::DataError;
use crate::taxonomy::TaxonomyError;

#[derive(Debug, Error)]
pub enum SequenceError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("not a series: {0}")]
    NotASeries(String),
    #[error("unknown attribute {0:?}")]
    UnknownAttribute(String),
    #[error("read error: {0}")]
    Io(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
}
