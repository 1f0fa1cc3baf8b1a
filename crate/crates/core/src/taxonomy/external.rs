use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{AnomalyType, TaxonomyError};

/// Source vocabulary of an external anomaly label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExternalSource {
    /// General point / contextual / collective typology.
    Chandola,
    /// Within-series time-series outlier typology.
    Kaiser,
}

impl ExternalSource {
    pub fn vocabulary(self) -> &'static [ExternalKind] {
        match self {
            ExternalSource::Chandola => {
                &[ExternalKind::Point, ExternalKind::Contextual, ExternalKind::Collective]
            }
            ExternalSource::Kaiser => &[
                ExternalKind::Additive,
                ExternalKind::TransitoryChange,
                ExternalKind::LevelShift,
                ExternalKind::Innovational,
                ExternalKind::DeviantCycle,
            ],
        }
    }
}

impl FromStr for ExternalSource {
    type Err = TaxonomyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "chandola" => Ok(ExternalSource::Chandola),
            "kaiser" => Ok(ExternalSource::Kaiser),
            _ => Err(TaxonomyError::UnknownSource(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExternalKind {
    Point,
    Contextual,
    Collective,
    Additive,
    TransitoryChange,
    LevelShift,
    Innovational,
    DeviantCycle,
}

impl ExternalKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExternalKind::Point => "point",
            ExternalKind::Contextual => "contextual",
            ExternalKind::Collective => "collective",
            ExternalKind::Additive => "additive",
            ExternalKind::TransitoryChange => "transitory_change",
            ExternalKind::LevelShift => "level_shift",
            ExternalKind::Innovational => "innovational",
            ExternalKind::DeviantCycle => "deviant_cycle",
        }
    }

    /// Labels that only exist within dependent (linked) data.
    pub fn needs_dependent_data(self) -> bool {
        !matches!(self, ExternalKind::Point | ExternalKind::Contextual)
    }
}

impl fmt::Display for ExternalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A label from another typology, validated against its source vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExternalTypeLabel {
    pub source: ExternalSource,
    pub kind: ExternalKind,
}

impl ExternalTypeLabel {
    pub fn new(source: ExternalSource, label: &str) -> Result<Self, TaxonomyError> {
        let wanted = label.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        source
            .vocabulary()
            .iter()
            .find(|k| k.as_str() == wanted)
            .map(|&kind| ExternalTypeLabel { source, kind })
            .ok_or_else(|| TaxonomyError::UnknownLabel { vocabulary: source, label: label.to_string() })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingContext {
    /// Whether the deviating values are extreme over the whole dataset.
    pub globally_extreme: bool,
    /// Whether cases are linked by a time, space or identity attribute.
    pub dependent_data: bool,
}

/// Candidate types of this typology that an external label can correspond to.
pub fn map_external(
    label: ExternalTypeLabel,
    context: MappingContext,
) -> Result<BTreeSet<AnomalyType>, TaxonomyError> {
    use AnomalyType::*;
    if label.kind.needs_dependent_data() && !context.dependent_data {
        return Err(TaxonomyError::NeedsDependentData(label.kind));
    }
    let spike = if context.globally_extreme { ExtremeValue } else { MultidimNumerical };
    let set: BTreeSet<AnomalyType> = match label.kind {
        ExternalKind::Point => AnomalyType::ALL.into(),
        ExternalKind::Contextual => [MultidimNumerical, MultidimRareClass, MultidimMixed].into(),
        ExternalKind::Collective => [MultidimNumerical, MultidimRareClass].into(),
        ExternalKind::Additive | ExternalKind::TransitoryChange => [spike].into(),
        ExternalKind::LevelShift | ExternalKind::Innovational | ExternalKind::DeviantCycle => {
            [MultidimNumerical].into()
        }
    };
    Ok(set)
}
