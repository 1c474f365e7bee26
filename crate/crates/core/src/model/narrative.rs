//! Narrative graphs: event, entity and literal nodes joined by factual and
//! narrative edges, plus the η map from events to their child narratives.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::binding::BindingResult;
use super::time::TimeSpec;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntityRef {
    pub id: String,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kg_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "lowercase")]
pub enum Literal {
    Text(String),
    Number(f64),
    Date(NaiveDate),
}

impl Literal {
    pub fn is_finite(&self) -> bool {
        match self {
            Literal::Number(x) => x.is_finite(),
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Location {
    Entity(String),
    Literal(Literal),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Participant {
    pub entity: String,
    pub role: String,
}

/// Where an event was found: a document and, when it could be located, the
/// character range of the source sentence in the document body.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Provenance {
    pub document: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentence: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventNode {
    pub id: String,
    pub label: String,
    #[serde(default)]
    pub time: TimeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_type: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub participants: Vec<Participant>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<Location>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub provenance: Vec<Provenance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub binding: Option<BindingResult>,
}

impl EventNode {
    pub fn new(id: impl Into<String>, label: impl Into<String>, time: TimeSpec) -> Self {
        Self {
            id: id.into(),
            label: label.into(),
            time,
            event_type: None,
            participants: Vec::new(),
            location: None,
            provenance: Vec::new(),
            binding: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FactualEdge {
    pub source: String,
    pub relation: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NarrativeEdge {
    pub source: String,
    pub predicate: String,
    pub target: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Event,
    Entity,
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Narrative {
    pub id: String,
    pub narrator: String,
    /// The event this narrative tells, when it was mined for one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic: Option<String>,
    #[serde(default)]
    pub events: BTreeMap<String, EventNode>,
    #[serde(default)]
    pub entities: BTreeMap<String, EntityRef>,
    #[serde(default)]
    pub literals: BTreeMap<String, Literal>,
    #[serde(default)]
    pub factual_edges: Vec<FactualEdge>,
    #[serde(default)]
    pub narrative_edges: Vec<NarrativeEdge>,
    #[serde(default)]
    pub eta: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("node id {0:?} already used in this narrative")]
pub struct DuplicateNode(pub String);

impl Narrative {
    pub fn new(id: impl Into<String>, narrator: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            narrator: narrator.into(),
            topic: None,
            events: BTreeMap::new(),
            entities: BTreeMap::new(),
            literals: BTreeMap::new(),
            factual_edges: Vec::new(),
            narrative_edges: Vec::new(),
            eta: BTreeMap::new(),
        }
    }

    pub fn node_kind(&self, id: &str) -> Option<NodeKind> {
        if self.events.contains_key(id) {
            Some(NodeKind::Event)
        } else if self.entities.contains_key(id) {
            Some(NodeKind::Entity)
        } else if self.literals.contains_key(id) {
            Some(NodeKind::Literal)
        } else {
            None
        }
    }

    fn claim(&self, id: &str) -> Result<(), DuplicateNode> {
        match self.node_kind(id) {
            Some(_) => Err(DuplicateNode(id.to_owned())),
            None => Ok(()),
        }
    }

    pub fn add_event(&mut self, event: EventNode) -> Result<(), DuplicateNode> {
        self.claim(&event.id)?;
        self.events.insert(event.id.clone(), event);
        Ok(())
    }

    pub fn add_entity(&mut self, entity: EntityRef) -> Result<(), DuplicateNode> {
        self.claim(&entity.id)?;
        self.entities.insert(entity.id.clone(), entity);
        Ok(())
    }

    pub fn add_literal(&mut self, id: impl Into<String>, value: Literal) -> Result<(), DuplicateNode> {
        let id = id.into();
        self.claim(&id)?;
        self.literals.insert(id, value);
        Ok(())
    }

    pub fn is_recursive(&self, event_id: &str) -> bool {
        self.eta.contains_key(event_id)
    }

    /// Events sorted by time (unknown times last), then by id.
    pub fn events_by_time(&self) -> Vec<&EventNode> {
        let mut events: Vec<&EventNode> = self.events.values().collect();
        events.sort_by(|a, b| a.time.sort_key().cmp(&b.time.sort_key()).then(a.id.cmp(&b.id)));
        events
    }

    /// Node and edge sets, ignoring binding annotations.
    pub fn structure(&self) -> Narrative {
        let mut copy = self.clone();
        for e in copy.events.values_mut() {
            e.binding = None;
        }
        copy
    }
}
