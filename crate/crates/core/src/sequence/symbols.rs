use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Read};

use super::SequenceError;
use crate::data::{Attribute, CaseId, Column, Dataset, Schema};

/// Ordered class tokens over a finite alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolSequence {
    tokens: Vec<String>,
    alphabet: BTreeSet<String>,
}

impl SymbolSequence {
    /// Without an explicit alphabet, the distinct tokens form it.
    pub fn new(tokens: Vec<String>, alphabet: Option<BTreeSet<String>>) -> Result<SymbolSequence, SequenceError> {
        if tokens.iter().any(String::is_empty) {
            return Err(SequenceError::InvalidParams("tokens must be non-empty".into()));
        }
        let alphabet = alphabet.unwrap_or_else(|| tokens.iter().cloned().collect());
        if let Some(t) = tokens.iter().find(|t| !alphabet.contains(*t)) {
            return Err(SequenceError::InvalidParams(format!("token {t:?} is not in the alphabet")));
        }
        Ok(SymbolSequence { tokens, alphabet })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn alphabet(&self) -> &BTreeSet<String> {
        &self.alphabet
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// One token per line; surrounding whitespace and blank lines are ignored.
pub fn load_symbols<R: Read>(source: R) -> Result<SymbolSequence, SequenceError> {
    let mut tokens = Vec::new();
    for line in BufReader::new(source).lines() {
        let line = line.map_err(|e| SequenceError::Io(e.to_string()))?;
        let t = line.trim();
        if !t.is_empty() {
            tokens.push(t.to_string());
        }
    }
    SymbolSequence::new(tokens, None)
}

/// Sliding windows: case `i` has `position = i` and tokens `i..i + width`
/// as categorical attributes `s0..s<width-1>`.
pub fn windowize(sequence: &SymbolSequence, width: usize) -> Result<Dataset, SequenceError> {
    let n = sequence.len();
    if width < 2 || width > n {
        return Err(SequenceError::InvalidParams(format!("width must lie in 2..={n}, got {width}")));
    }
    let count = n - width + 1;
    let mut attributes = vec![Attribute::continuous("position")];
    attributes.extend((0..width).map(|j| Attribute::categorical(format!("s{j}"))));
    let schema = Schema::new(attributes, Some("position".into()))?;
    let mut columns = vec![Column::Continuous((0..count).map(|i| i as f64).collect())];
    for j in 0..width {
        columns.push(Column::Categorical((0..count).map(|i| sequence.tokens[i + j].clone()).collect()));
    }
    Ok(Dataset::new(schema, (0..count as u64).map(CaseId).collect(), columns)?)
}
