use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::DataError;

/// Kind of a single attribute. A set of attributes is "mixed" when it
/// contains both kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Continuous,
    Categorical,
}

impl fmt::Display for AttributeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttributeKind::Continuous => f.write_str("continuous"),
            AttributeKind::Categorical => f.write_str("categorical"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub kind: AttributeKind,
}

impl Attribute {
    pub fn continuous(name: impl Into<String>) -> Self {
        Attribute { name: name.into(), kind: AttributeKind::Continuous }
    }

    pub fn categorical(name: impl Into<String>) -> Self {
        Attribute { name: name.into(), kind: AttributeKind::Categorical }
    }
}

/// Ordered attribute list plus an optional dependency attribute that links
/// cases (time, position, identity).
///
/// Serialized as the schema sidecar:
/// `{"attributes":[{"name":..,"kind":"continuous"|"categorical"}],"dependency":name|null}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSchema")]
pub struct Schema {
    attributes: Vec<Attribute>,
    #[serde(default)]
    dependency: Option<String>,
}

#[derive(Deserialize)]
struct RawSchema {
    attributes: Vec<Attribute>,
    #[serde(default)]
    dependency: Option<String>,
}

impl TryFrom<RawSchema> for Schema {
    type Error = DataError;

    fn try_from(raw: RawSchema) -> Result<Self, Self::Error> {
        Schema::new(raw.attributes, raw.dependency)
    }
}

impl Schema {
    pub fn new(attributes: Vec<Attribute>, dependency: Option<String>) -> Result<Self, DataError> {
        let mut seen = HashSet::new();
        for attr in &attributes {
            if attr.name.is_empty() {
                return Err(DataError::InvalidSchema("attribute name is empty".into()));
            }
            if !seen.insert(attr.name.as_str()) {
                return Err(DataError::InvalidSchema(format!(
                    "duplicate attribute name {:?}",
                    attr.name
                )));
            }
        }
        if let Some(dep) = &dependency {
            if !seen.contains(dep.as_str()) {
                return Err(DataError::InvalidSchema(format!(
                    "dependency attribute {dep:?} is not in the attribute list"
                )));
            }
        }
        Ok(Schema { attributes, dependency })
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn dependency(&self) -> Option<&str> {
        self.dependency.as_deref()
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn name(&self, index: usize) -> &str {
        &self.attributes[index].name
    }

    pub fn kind(&self, index: usize) -> AttributeKind {
        self.attributes[index].kind
    }

    pub fn indices_of(&self, kind: AttributeKind) -> Vec<usize> {
        self.attributes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.kind == kind)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn continuous_indices(&self) -> Vec<usize> {
        self.indices_of(AttributeKind::Continuous)
    }

    pub fn categorical_indices(&self) -> Vec<usize> {
        self.indices_of(AttributeKind::Categorical)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, DataError> {
        serde_json::from_str(text).map_err(|e| DataError::InvalidSchema(e.to_string()))
    }
}
