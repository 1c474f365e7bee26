//! Embeddings looked up from a fixed table.

use std::collections::BTreeMap;
use std::path::Path;

use super::{EmbeddingBackend, SemanticsError};

fn normalize(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Maps texts to stored vectors. A text misses only if neither its exact form
/// nor its whitespace-collapsed lowercase form is in the table.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureTable {
    dimension: usize,
    exact: BTreeMap<String, Vec<f64>>,
    folded: BTreeMap<String, Vec<f64>>,
}

impl FixtureTable {
    pub fn new(entries: BTreeMap<String, Vec<f64>>) -> Result<Self, SemanticsError> {
        let dimension = entries.values().next().map_or(0, Vec::len);
        let mut folded = BTreeMap::new();
        for (text, v) in &entries {
            if v.len() != dimension {
                return Err(SemanticsError::DimensionMismatch {
                    expected: dimension,
                    actual: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(SemanticsError::NonFinite);
            }
            folded.entry(normalize(text)).or_insert_with(|| v.clone());
        }
        Ok(Self {
            dimension,
            exact: entries,
            folded,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, SemanticsError> {
        let entries: BTreeMap<String, Vec<f64>> =
            serde_json::from_str(text).map_err(|e| SemanticsError::Fixture(e.to_string()))?;
        Self::new(entries)
    }

    pub fn load(path: &Path) -> Result<Self, SemanticsError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SemanticsError::Fixture(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn len(&self) -> usize {
        self.exact.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exact.is_empty()
    }

    pub fn lookup(&self, text: &str) -> Option<&[f64]> {
        self.exact
            .get(text)
            .or_else(|| self.folded.get(&normalize(text)))
            .map(Vec::as_slice)
    }
}

impl EmbeddingBackend for FixtureTable {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, SemanticsError> {
        texts
            .iter()
            .map(|t| {
                self.lookup(t)
                    .map(<[f64]>::to_vec)
                    .ok_or_else(|| SemanticsError::UnknownText((*t).to_owned()))
            })
            .collect()
    }
}
