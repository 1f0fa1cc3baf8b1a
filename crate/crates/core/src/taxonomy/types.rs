use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::AttributeKind;

/// The six anomaly types, one per cell of the data-kind × cardinality grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AnomalyType {
    /// Type I: extremely high, low or rare value of individual continuous attributes.
    #[serde(rename = "I")]
    ExtremeValue,
    /// Type II: uncommon class of individual categorical attributes.
    #[serde(rename = "II")]
    RareClass,
    /// Type III: both a Type I and a Type II deviation on the same case.
    #[serde(rename = "III")]
    SimpleMixed,
    /// Type IV: deviant combination of continuous values, none extreme on its own.
    #[serde(rename = "IV")]
    MultidimNumerical,
    /// Type V: rare combination of individually common class values.
    #[serde(rename = "V")]
    MultidimRareClass,
    /// Type VI: class (or class combination) that is common overall but rare
    /// in the case's numerical neighborhood.
    #[serde(rename = "VI")]
    MultidimMixed,
}

impl AnomalyType {
    pub const ALL: [AnomalyType; 6] = [
        AnomalyType::ExtremeValue,
        AnomalyType::RareClass,
        AnomalyType::SimpleMixed,
        AnomalyType::MultidimNumerical,
        AnomalyType::MultidimRareClass,
        AnomalyType::MultidimMixed,
    ];

    pub fn roman(self) -> &'static str {
        match self {
            AnomalyType::ExtremeValue => "I",
            AnomalyType::RareClass => "II",
            AnomalyType::SimpleMixed => "III",
            AnomalyType::MultidimNumerical => "IV",
            AnomalyType::MultidimRareClass => "V",
            AnomalyType::MultidimMixed => "VI",
        }
    }

    /// Zero-based position in [`AnomalyType::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            AnomalyType::ExtremeValue => "extreme value anomaly",
            AnomalyType::RareClass => "rare class anomaly",
            AnomalyType::SimpleMixed => "simple mixed data anomaly",
            AnomalyType::MultidimNumerical => "multidimensional numerical anomaly",
            AnomalyType::MultidimRareClass => "multidimensional rare class anomaly",
            AnomalyType::MultidimMixed => "multidimensional mixed data anomaly",
        }
    }

    /// Identifier of the reference detector for this type.
    pub fn detector_id(self) -> &'static str {
        match self {
            AnomalyType::ExtremeValue => "type1",
            AnomalyType::RareClass => "type2",
            AnomalyType::SimpleMixed => "type3",
            AnomalyType::MultidimNumerical => "type4",
            AnomalyType::MultidimRareClass => "type5",
            AnomalyType::MultidimMixed => "type6",
        }
    }

    /// Builds a type from its grid cell.
    pub fn from_cell(kinds: DataKinds, cardinality: Cardinality) -> AnomalyType {
        match (kinds, cardinality) {
            (DataKinds::Continuous, Cardinality::Univariate) => AnomalyType::ExtremeValue,
            (DataKinds::Categorical, Cardinality::Univariate) => AnomalyType::RareClass,
            (DataKinds::Mixed, Cardinality::Univariate) => AnomalyType::SimpleMixed,
            (DataKinds::Continuous, Cardinality::Multivariate) => AnomalyType::MultidimNumerical,
            (DataKinds::Categorical, Cardinality::Multivariate) => AnomalyType::MultidimRareClass,
            (DataKinds::Mixed, Cardinality::Multivariate) => AnomalyType::MultidimMixed,
        }
    }
}

impl fmt::Display for AnomalyType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.roman())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownType(pub String);

impl fmt::Display for UnknownType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown anomaly type {:?} (expected I..VI or 1..6)", self.0)
    }
}

impl std::error::Error for UnknownType {}

impl FromStr for AnomalyType {
    type Err = UnknownType;

    /// Accepts roman numerals, digits 1-6 and detector ids (`type1`..`type6`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let t = t.strip_prefix("type").unwrap_or(t);
        let found = AnomalyType::ALL.into_iter().find(|a| {
            a.roman().eq_ignore_ascii_case(t) || (a.index() + 1).to_string() == t
        });
        found.ok_or_else(|| UnknownType(s.to_string()))
    }
}

/// Column of the grid: which data kinds carry the deviation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataKinds {
    Continuous,
    Categorical,
    Mixed,
}

impl DataKinds {
    pub fn kinds(self) -> BTreeSet<AttributeKind> {
        match self {
            DataKinds::Continuous => [AttributeKind::Continuous].into(),
            DataKinds::Categorical => [AttributeKind::Categorical].into(),
            DataKinds::Mixed => [AttributeKind::Continuous, AttributeKind::Categorical].into(),
        }
    }
}

/// Row of the grid: whether attributes deviate on their own or jointly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cardinality {
    Univariate,
    Multivariate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Locality {
    Global,
    Local,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeProperties {
    pub data_kinds: BTreeSet<AttributeKind>,
    pub cardinality: Cardinality,
    pub locality: Locality,
}

impl TypeProperties {
    pub fn is_mixed(&self) -> bool {
        self.data_kinds.len() == 2
    }
}

pub fn grid_cell(t: AnomalyType) -> (DataKinds, Cardinality) {
    match t {
        AnomalyType::ExtremeValue => (DataKinds::Continuous, Cardinality::Univariate),
        AnomalyType::RareClass => (DataKinds::Categorical, Cardinality::Univariate),
        AnomalyType::SimpleMixed => (DataKinds::Mixed, Cardinality::Univariate),
        AnomalyType::MultidimNumerical => (DataKinds::Continuous, Cardinality::Multivariate),
        AnomalyType::MultidimRareClass => (DataKinds::Categorical, Cardinality::Multivariate),
        AnomalyType::MultidimMixed => (DataKinds::Mixed, Cardinality::Multivariate),
    }
}

/// Univariate types deviate regardless of other attributes and are global;
/// multivariate types depend on the situation and are local.
pub fn locality(t: AnomalyType) -> Locality {
    match grid_cell(t).1 {
        Cardinality::Univariate => Locality::Global,
        Cardinality::Multivariate => Locality::Local,
    }
}

pub fn type_properties(t: AnomalyType) -> TypeProperties {
    let (kinds, cardinality) = grid_cell(t);
    TypeProperties { data_kinds: kinds.kinds(), cardinality, locality: locality(t) }
}

/// Usage of the terms outlier and novelty relative to the six types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Term {
    Anomaly,
    Deviant,
    Outlier,
    Novelty,
}

impl Term {
    pub fn definition(self) -> &'static str {
        match self {
            Term::Anomaly | Term::Deviant => {
                "umbrella term: a case that does not fit the general patterns of the dataset"
            }
            Term::Outlier => {
                "a case in a numerically isolated region: types I and III, and type IV in independent data"
            }
            Term::Novelty => {
                "a case representing a previously unseen event or object, e.g. in change-point or one-class settings"
            }
        }
    }

    /// Whether an anomaly of type `t` is an outlier in the strict sense.
    /// `dependent_data` matters only for type IV.
    pub fn is_outlier(t: AnomalyType, dependent_data: bool) -> bool {
        match t {
            AnomalyType::ExtremeValue | AnomalyType::SimpleMixed => true,
            AnomalyType::MultidimNumerical => !dependent_data,
            _ => false,
        }
    }
}
