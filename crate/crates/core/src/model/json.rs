//! Canonical JSON form of a store: sorted keys, arrays sorted by id.

use serde::{Deserialize, Serialize};

use super::narrative::Narrative;
use super::relation::{RelationEntry, RelationRegistry};
use super::store::{NarrativeStore, StoreError};
use super::viewpoint::Viewpoint;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreDocument {
    pub narratives: Vec<Narrative>,
    pub relations: Vec<RelationEntry>,
    pub viewpoints: Vec<Viewpoint>,
}

#[derive(Debug, thiserror::Error)]
pub enum JsonError {
    #[error("malformed store JSON: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("inconsistent store: {0}")]
    Store(#[from] StoreError),
}

/// Pretty-prints any value with object keys in lexicographic order.
pub fn to_canonical_string<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    // serde_json's default map is ordered by key, so a round trip through
    // `Value` sorts struct fields as well.
    let value = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&value)?;
    s.push('\n');
    Ok(s)
}

impl NarrativeStore {
    pub fn to_document(&self) -> StoreDocument {
        StoreDocument {
            narratives: self.narratives.values().cloned().collect(),
            relations: self.relations.entries(),
            viewpoints: self.viewpoints.values().cloned().collect(),
        }
    }

    pub fn to_canonical_json(&self) -> String {
        to_canonical_string(&self.to_document()).expect("store values are always serializable")
    }

    /// Rebuilds a store, checking viewpoint hierarchy, narrator and η
    /// references and η acyclicity. Narrative-internal violations are kept
    /// and can be listed with `validate_narrative`.
    pub fn from_document(doc: StoreDocument) -> Result<Self, StoreError> {
        let mut store = NarrativeStore::new(RelationRegistry::from_entries(doc.relations)?);

        // parents may be listed after their children
        let mut pending = doc.viewpoints;
        while !pending.is_empty() {
            let before = pending.len();
            let mut rest = Vec::new();
            for v in pending {
                let ready = v
                    .parent
                    .as_ref()
                    .map_or(true, |p| p == &v.id || store.viewpoints.contains_key(p));
                if ready {
                    store.upsert_viewpoint(v)?;
                } else {
                    rest.push(v);
                }
            }
            if rest.len() == before {
                let v = &rest[0];
                return Err(StoreError::UnknownViewpoint(v.parent.clone().unwrap_or_default()));
            }
            pending = rest;
        }

        // insert children before parents so every η target resolves
        let mut pending = doc.narratives;
        while !pending.is_empty() {
            let before = pending.len();
            let mut rest = Vec::new();
            for n in pending {
                let ready = n
                    .eta
                    .values()
                    .all(|c| c != &n.id && store.narratives.contains_key(c));
                if ready {
                    store.insert_narrative(n)?;
                } else {
                    rest.push(n);
                }
            }
            if rest.len() == before {
                let ids: std::collections::BTreeSet<&String> = rest.iter().map(|n| &n.id).collect();
                let n = &rest[0];
                let child = n.eta.values().find(|c| !store.narratives.contains_key(*c)).unwrap();
                return Err(if ids.contains(child) {
                    StoreError::CycleDetected { parent: n.id.clone(), child: child.clone() }
                } else {
                    StoreError::MissingNarrative(child.clone())
                });
            }
            pending = rest;
        }
        Ok(store)
    }

    pub fn from_json(text: &str) -> Result<Self, JsonError> {
        let doc: StoreDocument = serde_json::from_str(text)?;
        Ok(Self::from_document(doc)?)
    }
}
