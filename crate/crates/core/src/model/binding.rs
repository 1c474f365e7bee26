//! Binding annotations attached to event nodes.

use serde::{Deserialize, Serialize};

use super::narrative::Participant;
use super::time::TimeSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BindingKind {
    Direct,
    Indirect,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KgCandidate {
    pub kg_id: String,
    pub kg_label: String,
    #[serde(default)]
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeSpec>,
    pub score: f64,
}

/// A triple imported from the knowledge graph for a bound event.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ImportedTriple {
    pub subject: String,
    pub predicate: String,
    pub object: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribution: Option<String>,
}

/// Link from a virtual event to an event of its child narrative.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MemberLink {
    pub narrative: String,
    pub event: String,
    pub label: String,
}

pub const UNKNOWN_TYPE: &str = "unknown";

/// Local stand-in for an event that has no counterpart in the knowledge
/// graph. Never written back to the graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VirtualSubgraph {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeSpec>,
    /// Event type if known, otherwise [`UNKNOWN_TYPE`].
    pub inferred_type: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub participants: Vec<Participant>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub members: Vec<MemberLink>,
    pub exportable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BindingResult {
    pub kind: BindingKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kg_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub virtual_subgraph: Option<VirtualSubgraph>,
    pub confidence: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub candidates: Vec<KgCandidate>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub imported: Vec<ImportedTriple>,
}

impl BindingResult {
    /// Checks that `kg_id` is present exactly when the kind is not `None`
    /// and that a `None` binding carries a local-only subgraph.
    pub fn check(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(format!("confidence {} outside [0, 1]", self.confidence));
        }
        match (self.kind, &self.kg_id, &self.virtual_subgraph) {
            (BindingKind::None, None, Some(v)) if !v.exportable => Ok(()),
            (BindingKind::None, None, Some(_)) => Err("virtual subgraph marked exportable".into()),
            (BindingKind::None, Some(_), _) => Err("unbound event carries a kg id".into()),
            (BindingKind::None, None, None) => Err("unbound event lacks a virtual subgraph".into()),
            (_, None, _) => Err(format!("{:?} binding lacks a kg id", self.kind)),
            (_, Some(_), Some(_)) => Err("bound event carries a virtual subgraph".into()),
            (_, Some(_), None) => Ok(()),
        }
    }
}
