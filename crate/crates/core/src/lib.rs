//! Typed anomaly benchmarking: datasets, six reference detectors (one per
//! anomaly type), case classification, ground-truth injection, dependent-data
//! transforms and per-type evaluation.

pub mod data;
pub mod detectors;
pub mod numfmt;
pub mod taxonomy;
pub mod inject;
pub mod sequence;
pub mod eval;
