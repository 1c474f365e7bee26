use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::{Arc, RwLock};

use super::narrative::{FactualEdge, Narrative, NarrativeEdge, NodeKind};
use super::relation::{RegistryError, RelationRegistry};
use super::viewpoint::{ancestors, AggregateStance, GroupHierarchy, Viewpoint, ViewpointModel};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StoreError {
    #[error("unknown relation predicate {0:?}")]
    UnknownPredicate(String),
    #[error("unknown factual relation {0:?}")]
    UnknownFactualRelation(String),
    #[error("node {0:?} is not an event")]
    EndpointNotEvent(String),
    #[error("factual edge target {0:?} is an event")]
    FactualTargetIsEvent(String),
    #[error("node {node:?} not found in narrative {narrative:?}")]
    MissingNode { narrative: String, node: String },
    #[error("narrative {0:?} not found")]
    MissingNarrative(String),
    #[error("narrative {0:?} already exists")]
    DuplicateNarrative(String),
    #[error("edge from {0:?} to itself rejected")]
    SelfLoopRejected(String),
    #[error("setting η to {child:?} from narrative {parent:?} would create a cycle")]
    CycleDetected { parent: String, child: String },
    #[error("narrative {child:?} is still referenced by {parent:?}")]
    StillReferenced { parent: String, child: String },
    #[error("unknown viewpoint {0:?}")]
    UnknownViewpoint(String),
    #[error("viewpoint hierarchy would contain a cycle through {0:?}")]
    ViewpointCycle(String),
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

pub type Result<T, E = StoreError> = std::result::Result<T, E>;

/// All narratives, the relation vocabulary and the viewpoints they refer to.
///
/// Mutations take `&mut self`; share across threads with [`SharedStore`].
#[derive(Clone)]
pub struct NarrativeStore {
    pub(crate) narratives: BTreeMap<String, Narrative>,
    pub(crate) relations: RelationRegistry,
    pub(crate) viewpoints: BTreeMap<String, Viewpoint>,
    model: Arc<dyn ViewpointModel>,
}

pub type SharedStore = Arc<RwLock<NarrativeStore>>;

impl fmt::Debug for NarrativeStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NarrativeStore")
            .field("narratives", &self.narratives)
            .field("relations", &self.relations)
            .field("viewpoints", &self.viewpoints)
            .finish_non_exhaustive()
    }
}

impl PartialEq for NarrativeStore {
    fn eq(&self, other: &Self) -> bool {
        self.narratives == other.narratives
            && self.relations == other.relations
            && self.viewpoints == other.viewpoints
    }
}

impl Default for NarrativeStore {
    fn default() -> Self {
        Self::new(RelationRegistry::default())
    }
}

impl NarrativeStore {
    pub fn new(relations: RelationRegistry) -> Self {
        Self {
            narratives: BTreeMap::new(),
            relations,
            viewpoints: BTreeMap::new(),
            model: Arc::new(GroupHierarchy),
        }
    }

    pub fn with_viewpoint_model(mut self, model: Arc<dyn ViewpointModel>) -> Self {
        self.model = model;
        self
    }

    pub fn relations(&self) -> &RelationRegistry {
        &self.relations
    }

    pub fn relations_mut(&mut self) -> &mut RelationRegistry {
        &mut self.relations
    }

    pub fn narratives(&self) -> impl Iterator<Item = &Narrative> {
        self.narratives.values()
    }

    pub fn narrative_ids(&self) -> impl Iterator<Item = &str> {
        self.narratives.keys().map(String::as_str)
    }

    pub fn narrative(&self, id: &str) -> Result<&Narrative> {
        self.narratives
            .get(id)
            .ok_or_else(|| StoreError::MissingNarrative(id.to_owned()))
    }

    pub(crate) fn narrative_mut(&mut self, id: &str) -> Result<&mut Narrative> {
        self.narratives
            .get_mut(id)
            .ok_or_else(|| StoreError::MissingNarrative(id.to_owned()))
    }

    pub fn len(&self) -> usize {
        self.narratives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.narratives.is_empty()
    }

    pub fn viewpoints(&self) -> impl Iterator<Item = &Viewpoint> {
        self.viewpoints.values()
    }

    pub fn viewpoint(&self, id: &str) -> Result<&Viewpoint> {
        self.viewpoints
            .get(id)
            .ok_or_else(|| StoreError::UnknownViewpoint(id.to_owned()))
    }

    /// Inserts or replaces a viewpoint. The parent must exist and the
    /// hierarchy must stay a forest.
    pub fn upsert_viewpoint(&mut self, viewpoint: Viewpoint) -> Result<()> {
        if let Some(parent) = &viewpoint.parent {
            if parent != &viewpoint.id && !self.viewpoints.contains_key(parent) {
                return Err(StoreError::UnknownViewpoint(parent.clone()));
            }
        }
        let id = viewpoint.id.clone();
        let previous = self.viewpoints.insert(id.clone(), viewpoint);
        if self.viewpoint_cycle_through(&id) {
            match previous {
                Some(p) => self.viewpoints.insert(id.clone(), p),
                None => self.viewpoints.remove(&id),
            };
            return Err(StoreError::ViewpointCycle(id));
        }
        Ok(())
    }

    fn viewpoint_cycle_through(&self, id: &str) -> bool {
        let chain = ancestors(&self.viewpoints, id);
        let last = chain.last().copied().unwrap_or(id);
        self.viewpoints
            .get(last)
            .and_then(|v| v.parent.as_deref())
            .is_some_and(|p| chain.contains(&p))
    }

    /// Adds a narrative. Its narrator and η targets must already resolve and
    /// it must not close an η cycle.
    pub fn insert_narrative(&mut self, narrative: Narrative) -> Result<()> {
        if self.narratives.contains_key(&narrative.id) {
            return Err(StoreError::DuplicateNarrative(narrative.id));
        }
        self.put_narrative(narrative)
    }

    /// Adds or replaces a narrative, with the same checks as
    /// [`insert_narrative`](Self::insert_narrative).
    pub fn put_narrative(&mut self, narrative: Narrative) -> Result<()> {
        self.viewpoint(&narrative.narrator)?;
        for (event, child) in &narrative.eta {
            if narrative.node_kind(event) != Some(NodeKind::Event) {
                return Err(StoreError::MissingNode {
                    narrative: narrative.id.clone(),
                    node: event.clone(),
                });
            }
            if child != &narrative.id && !self.narratives.contains_key(child) {
                return Err(StoreError::MissingNarrative(child.clone()));
            }
        }
        for child in narrative.eta.values() {
            if child == &narrative.id || self.eta_reaches(child, &narrative.id) {
                return Err(StoreError::CycleDetected {
                    parent: narrative.id.clone(),
                    child: child.clone(),
                });
            }
        }
        self.narratives.insert(narrative.id.clone(), narrative);
        Ok(())
    }

    /// Removes a narrative that no other narrative references through η.
    pub fn remove_narrative(&mut self, id: &str) -> Result<Narrative> {
        self.narrative(id)?;
        if let Some(parent) = self
            .narratives
            .values()
            .find(|n| n.id != id && n.eta.values().any(|c| c == id))
        {
            return Err(StoreError::StillReferenced {
                parent: parent.id.clone(),
                child: id.to_owned(),
            });
        }
        Ok(self.narratives.remove(id).expect("checked above"))
    }

    fn event_in(&self, narrative: &Narrative, id: &str) -> Result<()> {
        match narrative.node_kind(id) {
            Some(NodeKind::Event) => Ok(()),
            Some(_) => Err(StoreError::EndpointNotEvent(id.to_owned())),
            None => Err(StoreError::MissingNode {
                narrative: narrative.id.clone(),
                node: id.to_owned(),
            }),
        }
    }

    /// Appends `⟨src, predicate, dst⟩` to a narrative.
    pub fn add_narrative_edge(
        &mut self,
        narrative_id: &str,
        src: &str,
        predicate: &str,
        dst: &str,
    ) -> Result<()> {
        let narrative = self.narrative(narrative_id)?;
        self.event_in(narrative, src)?;
        self.event_in(narrative, dst)?;
        if self.relations.predicate(predicate).is_none() {
            return Err(StoreError::UnknownPredicate(predicate.to_owned()));
        }
        if src == dst {
            return Err(StoreError::SelfLoopRejected(src.to_owned()));
        }
        self.narrative_mut(narrative_id)?.narrative_edges.push(NarrativeEdge {
            source: src.to_owned(),
            predicate: predicate.to_owned(),
            target: dst.to_owned(),
        });
        Ok(())
    }

    /// Appends a factual edge. The target must be an entity or literal.
    pub fn add_factual_edge(
        &mut self,
        narrative_id: &str,
        src: &str,
        relation: &str,
        dst: &str,
    ) -> Result<()> {
        let narrative = self.narrative(narrative_id)?;
        for id in [src, dst] {
            if narrative.node_kind(id).is_none() {
                return Err(StoreError::MissingNode {
                    narrative: narrative_id.to_owned(),
                    node: id.to_owned(),
                });
            }
        }
        if narrative.node_kind(dst) == Some(NodeKind::Event) {
            return Err(StoreError::FactualTargetIsEvent(dst.to_owned()));
        }
        if !self.relations.is_factual(relation) {
            return Err(StoreError::UnknownFactualRelation(relation.to_owned()));
        }
        self.narrative_mut(narrative_id)?.factual_edges.push(FactualEdge {
            source: src.to_owned(),
            relation: relation.to_owned(),
            target: dst.to_owned(),
        });
        Ok(())
    }

    /// Narratives directly referenced by `id` through η.
    pub fn eta_children(&self, id: &str) -> BTreeSet<&str> {
        self.narratives
            .get(id)
            .map(|n| n.eta.values().map(String::as_str).collect())
            .unwrap_or_default()
    }

    /// Whether `target` is reachable from `from` by following η (including
    /// `from == target`).
    pub fn eta_reaches(&self, from: &str, target: &str) -> bool {
        let mut seen = BTreeSet::new();
        let mut stack = vec![from];
        while let Some(cur) = stack.pop() {
            if cur == target {
                return true;
            }
            if seen.insert(cur) {
                stack.extend(self.eta_children(cur));
            }
        }
        false
    }

    /// Narratives reachable from `root` through η, including `root`, in
    /// depth-first preorder.
    pub fn eta_closure<'a>(&'a self, root: &'a str) -> Vec<&'a str> {
        let mut seen = BTreeSet::new();
        let mut order = Vec::new();
        let mut stack = vec![root];
        while let Some(cur) = stack.pop() {
            if !seen.insert(cur) {
                continue;
            }
            order.push(cur);
            let children: Vec<&str> = self.eta_children(cur).into_iter().collect();
            stack.extend(children.into_iter().rev());
        }
        order
    }

    /// A cycle in the η-graph, if any. Only reachable through direct field
    /// manipulation; every public mutation keeps the graph acyclic.
    pub fn find_eta_cycle(&self) -> Option<Vec<String>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Open,
            Done,
        }
        fn visit<'a>(
            store: &'a NarrativeStore,
            id: &'a str,
            marks: &mut BTreeMap<&'a str, Mark>,
            path: &mut Vec<&'a str>,
        ) -> Option<Vec<String>> {
            match marks.get(id) {
                Some(Mark::Done) => return None,
                Some(Mark::Open) => {
                    let start = path.iter().position(|p| *p == id).unwrap_or(0);
                    return Some(path[start..].iter().map(|s| s.to_string()).collect());
                }
                None => {}
            }
            marks.insert(id, Mark::Open);
            path.push(id);
            for child in store.eta_children(id) {
                if let Some(c) = visit(store, child, marks, path) {
                    return Some(c);
                }
            }
            path.pop();
            marks.insert(id, Mark::Done);
            None
        }
        let mut marks = BTreeMap::new();
        for id in self.narratives.keys() {
            if let Some(c) = visit(self, id, &mut marks, &mut Vec::new()) {
                return Some(c);
            }
        }
        None
    }

    /// Makes `event_id` in `narrative_id` a recursive node pointing at
    /// `child_id`.
    pub fn set_eta(&mut self, narrative_id: &str, event_id: &str, child_id: &str) -> Result<()> {
        let narrative = self.narrative(narrative_id)?;
        self.event_in(narrative, event_id)?;
        self.narrative(child_id)?;
        if self.eta_reaches(child_id, narrative_id) {
            return Err(StoreError::CycleDetected {
                parent: narrative_id.to_owned(),
                child: child_id.to_owned(),
            });
        }
        self.narrative_mut(narrative_id)?
            .eta
            .insert(event_id.to_owned(), child_id.to_owned());
        Ok(())
    }

    /// The child narrative of `event_id`, or `None` for a leaf event.
    pub fn eta(&self, event_id: &str, narrative_id: &str) -> Result<Option<&Narrative>> {
        let narrative = self.narrative(narrative_id)?;
        self.event_in(narrative, event_id)?;
        narrative
            .eta
            .get(event_id)
            .map(|child| self.narrative(child))
            .transpose()
    }

    pub fn viewpoint_compatible(&self, a: &str, b: &str) -> Result<bool> {
        self.viewpoint(a)?;
        self.viewpoint(b)?;
        Ok(self.model.compatible(&self.viewpoints, a, b))
    }

    pub fn aggregate_stance(&self, group: &[&str], claim: &str) -> Result<AggregateStance> {
        let members = group
            .iter()
            .map(|id| self.viewpoint(id))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.model.aggregate(&members, claim))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::narrative::{EntityRef, EventNode};
    use crate::model::relation::HAPPENED_AFTER;
    use crate::model::time::TimeSpec;

    fn store() -> NarrativeStore {
        let mut s = NarrativeStore::default();
        s.upsert_viewpoint(Viewpoint::new("US")).unwrap();
        let mut n = Narrative::new("n", "US");
        n.add_event(EventNode::new("powell", "Colin Powell UN Address", TimeSpec::month(2003, 2).unwrap()))
            .unwrap();
        n.add_event(EventNode::new("911", "9/11 attacks", TimeSpec::ymd(2001, 9, 11).unwrap()))
            .unwrap();
        n.add_entity(EntityRef { id: "iraq".into(), label: "Iraq".into(), kg_id: None }).unwrap();
        s.insert_narrative(n).unwrap();
        s
    }

    #[test]
    fn narrative_edge_checks() {
        let mut s = store();
        s.add_narrative_edge("n", "powell", HAPPENED_AFTER, "911").unwrap();
        assert_eq!(
            s.add_narrative_edge("n", "powell", HAPPENED_AFTER, "powell"),
            Err(StoreError::SelfLoopRejected("powell".into()))
        );
        assert_eq!(
            s.add_narrative_edge("n", "powell", "casued by", "911"),
            Err(StoreError::UnknownPredicate("casued by".into()))
        );
        assert_eq!(
            s.add_narrative_edge("n", "powell", HAPPENED_AFTER, "iraq"),
            Err(StoreError::EndpointNotEvent("iraq".into()))
        );
        assert!(matches!(
            s.add_narrative_edge("n", "nope", HAPPENED_AFTER, "911"),
            Err(StoreError::MissingNode { .. })
        ));
        assert_eq!(s.narrative("n").unwrap().narrative_edges.len(), 1);
    }

    #[test]
    fn factual_edge_checks() {
        let mut s = store();
        s.add_factual_edge("n", "powell", "location", "iraq").unwrap();
        assert_eq!(
            s.add_factual_edge("n", "powell", "participant", "911"),
            Err(StoreError::FactualTargetIsEvent("911".into()))
        );
        assert_eq!(
            s.add_factual_edge("n", "powell", "hates", "iraq"),
            Err(StoreError::UnknownFactualRelation("hates".into()))
        );
    }

    #[test]
    fn eta_cycles_rejected() {
        let mut s = store();
        assert!(matches!(s.set_eta("n", "powell", "n"), Err(StoreError::CycleDetected { .. })));
        let mut b = Narrative::new("b", "US");
        b.add_event(EventNode::new("e", "x", TimeSpec::unknown())).unwrap();
        s.insert_narrative(b).unwrap();
        s.set_eta("n", "powell", "b").unwrap();
        assert!(matches!(s.set_eta("b", "e", "n"), Err(StoreError::CycleDetected { .. })));
        assert_eq!(s.eta("powell", "n").unwrap().unwrap().id, "b");
        assert_eq!(s.eta("911", "n").unwrap(), None);
        assert!(matches!(s.eta("zzz", "n"), Err(StoreError::MissingNode { .. })));
        assert_eq!(s.find_eta_cycle(), None);
        assert_eq!(s.eta_closure("n"), vec!["n", "b"]);
        assert!(s.remove_narrative("b").is_err());
    }

    #[test]
    fn detects_cycle_planted_directly() {
        let mut s = store();
        let mut b = Narrative::new("b", "US");
        b.add_event(EventNode::new("e", "x", TimeSpec::unknown())).unwrap();
        s.insert_narrative(b).unwrap();
        s.set_eta("n", "powell", "b").unwrap();
        s.narratives.get_mut("b").unwrap().eta.insert("e".into(), "n".into());
        let cycle = s.find_eta_cycle().unwrap();
        assert_eq!(cycle.len(), 2);
    }

    #[test]
    fn narrator_must_resolve() {
        let mut s = store();
        assert_eq!(
            s.insert_narrative(Narrative::new("x", "RU")),
            Err(StoreError::UnknownViewpoint("RU".into()))
        );
    }

    #[test]
    fn viewpoint_forest() {
        let mut s = NarrativeStore::default();
        s.upsert_viewpoint(Viewpoint::new("US")).unwrap();
        s.upsert_viewpoint(Viewpoint::new("US President").with_parent("US")).unwrap();
        s.upsert_viewpoint(Viewpoint::new("RU")).unwrap();
        assert!(s.viewpoint_compatible("US President", "US").unwrap());
        assert!(!s.viewpoint_compatible("RU", "US").unwrap());
        assert!(s.viewpoint_compatible("RU", "XX").is_err());
        assert_eq!(
            s.upsert_viewpoint(Viewpoint::new("US").with_parent("US President")),
            Err(StoreError::ViewpointCycle("US".into()))
        );
        assert_eq!(s.viewpoint("US").unwrap().parent, None);
        assert_eq!(
            s.upsert_viewpoint(Viewpoint::new("a").with_parent("a")),
            Err(StoreError::ViewpointCycle("a".into()))
        );
        assert!(s.viewpoint("a").is_err());
        assert!(s.aggregate_stance(&["US", "nope"], "c").is_err());
    }
}
