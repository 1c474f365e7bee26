//! Read-only consistency checks over a narrative.

use serde::{Deserialize, Serialize};

use super::narrative::{Location, NodeKind};
use super::store::{NarrativeStore, Result};
use super::time::TimeKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    EmptyLabel,
    InvalidTime,
    UnregisteredRole,
    DanglingReference,
    NonFiniteLiteral,
    UnknownPredicate,
    #[serde(rename = "R_N-endpoint")]
    NarrativeEdgeEndpoint,
    SelfLoop,
    UnknownFactualRelation,
    #[serde(rename = "R_F-endpoint")]
    FactualEdgeEndpoint,
    EtaKeyNotEvent,
    EtaTargetMissing,
    InvalidBinding,
    UnknownNarrator,
    TimeContainment,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    pub severity: Severity,
    pub kind: ViolationKind,
    pub node: Option<String>,
    pub message: String,
}

impl Violation {
    fn error(kind: ViolationKind, node: &str, message: String) -> Self {
        Self {
            severity: Severity::Error,
            kind,
            node: Some(node.to_owned()),
            message,
        }
    }
}

impl NarrativeStore {
    /// Lists every invariant violation in a narrative. Time-containment
    /// problems of recursive nodes are warnings; everything else is an error.
    pub fn validate_narrative(&self, narrative_id: &str) -> Result<Vec<Violation>> {
        use ViolationKind::*;
        let n = self.narrative(narrative_id)?;
        let mut out = Vec::new();

        if self.viewpoint(&n.narrator).is_err() {
            out.push(Violation::error(
                UnknownNarrator,
                &n.narrator,
                format!("narrator {:?} is not a known viewpoint", n.narrator),
            ));
        }

        for e in n.events.values() {
            if e.label.trim().is_empty() {
                out.push(Violation::error(EmptyLabel, &e.id, "event label is empty".into()));
            }
            if let Err(msg) = e.time.check() {
                out.push(Violation::error(InvalidTime, &e.id, msg));
            }
            for p in &e.participants {
                if !self.relations.is_factual(&p.role) {
                    out.push(Violation::error(
                        UnregisteredRole,
                        &e.id,
                        format!("participant role {:?} is not a registered factual relation", p.role),
                    ));
                }
                if n.node_kind(&p.entity) != Some(NodeKind::Entity) {
                    out.push(Violation::error(
                        DanglingReference,
                        &e.id,
                        format!("participant {:?} is not an entity of this narrative", p.entity),
                    ));
                }
            }
            match &e.location {
                Some(Location::Entity(id)) if n.node_kind(id) != Some(NodeKind::Entity) => {
                    out.push(Violation::error(
                        DanglingReference,
                        &e.id,
                        format!("location {id:?} is not an entity of this narrative"),
                    ));
                }
                Some(Location::Literal(l)) if !l.is_finite() => {
                    out.push(Violation::error(NonFiniteLiteral, &e.id, "location literal is not finite".into()));
                }
                _ => {}
            }
            if let Some(b) = &e.binding {
                if let Err(msg) = b.check() {
                    out.push(Violation::error(InvalidBinding, &e.id, msg));
                }
            }
        }

        for ent in n.entities.values() {
            if ent.label.trim().is_empty() {
                out.push(Violation::error(EmptyLabel, &ent.id, "entity label is empty".into()));
            }
        }
        for (id, lit) in &n.literals {
            if !lit.is_finite() {
                out.push(Violation::error(NonFiniteLiteral, id, "literal is not finite".into()));
            }
        }

        for edge in &n.narrative_edges {
            if self.relations.predicate(&edge.predicate).is_none() {
                out.push(Violation::error(
                    UnknownPredicate,
                    &edge.source,
                    format!("predicate {:?} is not registered", edge.predicate),
                ));
            }
            for end in [&edge.source, &edge.target] {
                if n.node_kind(end) != Some(NodeKind::Event) {
                    out.push(Violation::error(
                        NarrativeEdgeEndpoint,
                        end,
                        format!("narrative edge endpoint {end:?} is not an event"),
                    ));
                }
            }
            if edge.source == edge.target {
                out.push(Violation::error(SelfLoop, &edge.source, "narrative edge is a self-loop".into()));
            }
        }

        for edge in &n.factual_edges {
            if !self.relations.is_factual(&edge.relation) {
                out.push(Violation::error(
                    UnknownFactualRelation,
                    &edge.source,
                    format!("factual relation {:?} is not registered", edge.relation),
                ));
            }
            if n.node_kind(&edge.source).is_none() {
                out.push(Violation::error(
                    DanglingReference,
                    &edge.source,
                    format!("factual edge source {:?} does not exist", edge.source),
                ));
            }
            match n.node_kind(&edge.target) {
                Some(NodeKind::Entity | NodeKind::Literal) => {}
                Some(NodeKind::Event) => out.push(Violation::error(
                    FactualEdgeEndpoint,
                    &edge.target,
                    format!("factual edge target {:?} is an event", edge.target),
                )),
                None => out.push(Violation::error(
                    DanglingReference,
                    &edge.target,
                    format!("factual edge target {:?} does not exist", edge.target),
                )),
            }
        }

        for (event_id, child_id) in &n.eta {
            let Some(event) = n.events.get(event_id) else {
                out.push(Violation::error(
                    EtaKeyNotEvent,
                    event_id,
                    format!("η key {event_id:?} is not an event of this narrative"),
                ));
                continue;
            };
            let Ok(child) = self.narrative(child_id) else {
                out.push(Violation::error(
                    EtaTargetMissing,
                    event_id,
                    format!("η target {child_id:?} does not exist"),
                ));
                continue;
            };
            if event.time.kind != TimeKind::Interval {
                continue;
            }
            for sub in child.events.values() {
                if event.time.contains(&sub.time) == Some(false) {
                    out.push(Violation {
                        severity: Severity::Warning,
                        kind: TimeContainment,
                        node: Some(sub.id.clone()),
                        message: format!(
                            "sub-event {:?} ({}) lies outside {:?} ({})",
                            sub.label, sub.time, event.label, event.time
                        ),
                    });
                }
            }
        }

        out.sort();
        out.dedup();
        Ok(out)
    }

    /// Whether a narrative has no error-severity violations.
    pub fn is_valid(&self, narrative_id: &str) -> Result<bool> {
        Ok(self
            .validate_narrative(narrative_id)?
            .iter()
            .all(|v| v.severity == Severity::Warning))
    }
}
