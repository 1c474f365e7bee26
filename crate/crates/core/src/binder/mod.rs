//! Linking narrative events to knowledge-graph events: candidate search,
//! direct / indirect / no-binding classification, virtual subgraphs for
//! unbound events and recursive binding over η.

mod live;
mod score;
mod snapshot;

pub use live::{parse_entity, LiveSource, WIKIDATA_ENTITY_DATA, WIKIPEDIA_API};
pub use score::{description_overlap, lexical, tokens, ScoreParams, Scorer, DESCRIPTION_WEIGHT};
pub use snapshot::{KgClaim, KgEntity, KgSnapshot, SnapshotSource, HAS_PART, PART_OF};

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{
    BindingKind, BindingResult, EventNode, ImportedTriple, KgCandidate, MemberLink, NarrativeStore, StoreError,
    TimeSpec, VirtualSubgraph, UNKNOWN_TYPE,
};

#[derive(Debug, thiserror::Error)]
pub enum BindError {
    #[error("cannot search for an empty label")]
    EmptyLabel,
    #[error("knowledge-graph snapshot: {0}")]
    Snapshot(String),
    #[error("knowledge-graph source unavailable: {0}")]
    SourceUnavailable(String),
    #[error("event {event:?} is already bound ({kind:?})")]
    AlreadyBound { event: String, kind: BindingKind },
    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Where candidates come from: a local snapshot or the live APIs.
pub trait KgSource: Send + Sync {
    /// Ranked candidates for a label, best first.
    fn search(&self, label: &str, time: &TimeSpec) -> Result<Vec<KgCandidate>, BindError>;
    fn entity(&self, kg_id: &str) -> Result<Option<KgEntity>, BindError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BindThresholds {
    pub direct: f64,
    pub indirect: f64,
    /// Minimum score gap between the top two candidates for a direct binding.
    pub gap: f64,
}

impl Default for BindThresholds {
    fn default() -> Self {
        Self {
            direct: 0.90,
            indirect: 0.60,
            gap: 0.05,
        }
    }
}

impl BindThresholds {
    pub fn validate(&self) -> Result<(), BindError> {
        let ok = (0.0..=1.0).contains(&self.indirect)
            && (0.0..=1.0).contains(&self.direct)
            && self.indirect <= self.direct
            && (0.0..=1.0).contains(&self.gap);
        if ok {
            Ok(())
        } else {
            Err(BindError::InvalidThresholds(format!(
                "need 0 <= indirect ({}) <= direct ({}) <= 1 and gap ({}) in [0, 1]",
                self.indirect, self.direct, self.gap
            )))
        }
    }
}

const EPS: f64 = 1e-9;

/// Score gap between the first two candidates; a lone candidate has the
/// whole score as its gap.
pub fn score_gap(candidates: &[KgCandidate]) -> f64 {
    match candidates {
        [] => 0.0,
        [only] => only.score,
        [a, b, ..] => a.score - b.score,
    }
}

fn stub(label: &str, time: &TimeSpec) -> VirtualSubgraph {
    VirtualSubgraph {
        label: label.to_owned(),
        time: time.is_known().then(|| time.clone()),
        inferred_type: UNKNOWN_TYPE.to_owned(),
        participants: Vec::new(),
        members: Vec::new(),
        exportable: false,
    }
}

pub fn classify_binding(
    label: &str,
    time: &TimeSpec,
    candidates: &[KgCandidate],
    thresholds: &BindThresholds,
) -> BindingResult {
    let top = candidates.first();
    let score = top.map_or(0.0, |c| c.score);
    let gap = score_gap(candidates);
    let unbound = || BindingResult {
        kind: BindingKind::None,
        kg_id: None,
        note: None,
        virtual_subgraph: Some(stub(label, time)),
        confidence: (1.0 - score).clamp(0.0, 1.0),
        candidates: candidates.to_vec(),
        imported: Vec::new(),
    };
    let Some(top) = top else { return unbound() };
    if score + EPS < thresholds.indirect {
        return unbound();
    }
    let (kind, note) = if score + EPS >= thresholds.direct && gap + EPS >= thresholds.gap {
        (BindingKind::Direct, None)
    } else if gap + EPS < thresholds.gap && candidates.len() > 1 {
        let runner = &candidates[1];
        (
            BindingKind::Indirect,
            Some(format!(
                "ambiguous: {} {:?} ({:.3}) and {} {:?} ({:.3}) are within {:.2}; left unresolved",
                top.kg_id, top.kg_label, top.score, runner.kg_id, runner.kg_label, runner.score, thresholds.gap
            )),
        )
    } else {
        (
            BindingKind::Indirect,
            Some(format!(
                "loss of focus: closest match is {} {:?} ({:.3})",
                top.kg_id, top.kg_label, top.score
            )),
        )
    };
    BindingResult {
        kind,
        kg_id: Some(top.kg_id.clone()),
        note,
        virtual_subgraph: None,
        confidence: score.clamp(0.0, 1.0),
        candidates: candidates.to_vec(),
        imported: Vec::new(),
    }
}

/// Local subgraph for an unbound event. For a recursive event the members
/// are the events of its child narrative.
pub fn materialize_virtual(
    store: &NarrativeStore,
    narrative_id: &str,
    event_id: &str,
) -> Result<VirtualSubgraph, BindError> {
    let narrative = store.narrative(narrative_id)?;
    let event = narrative.events.get(event_id).ok_or_else(|| StoreError::MissingNode {
        narrative: narrative_id.to_owned(),
        node: event_id.to_owned(),
    })?;
    if let Some(b) = &event.binding {
        if b.kind != BindingKind::None {
            return Err(BindError::AlreadyBound {
                event: event_id.to_owned(),
                kind: b.kind,
            });
        }
    }
    virtual_for(store, narrative_id, event)
}

fn virtual_for(store: &NarrativeStore, narrative_id: &str, event: &EventNode) -> Result<VirtualSubgraph, BindError> {
    let event_id = event.id.as_str();
    let mut sub = stub(&event.label, &event.time);
    if let Some(t) = &event.event_type {
        sub.inferred_type = t.clone();
    }
    sub.participants = event.participants.clone();
    if let Some(child) = store.eta(event_id, narrative_id)? {
        sub.members = child
            .events_by_time()
            .into_iter()
            .map(|e| MemberLink {
                narrative: child.id.clone(),
                event: e.id.clone(),
                label: e.label.clone(),
            })
            .collect();
    }
    Ok(sub)
}

const VERB_HINTS: [&str; 24] = [
    "launch", "launches", "declare", "declares", "invade", "invades", "attack", "attacks", "begin",
    "begins", "end", "ends", "sign", "signs", "win", "wins", "withdraw", "withdraws", "announce",
    "announces", "capture", "captures", "kill", "kills",
];

fn verb_like(word: &str) -> bool {
    let w = word.to_lowercase();
    VERB_HINTS.contains(&w.as_str()) || (w.len() > 4 && w.ends_with("ed"))
}

/// Why a label looks like it names two events, if it does. Reported only.
pub fn compound_reason(label: &str) -> Option<String> {
    let years: BTreeSet<&str> = label
        .split(|c: char| !c.is_ascii_digit())
        .filter(|w| w.len() == 4)
        .collect();
    if years.len() >= 2 {
        return Some(format!("mentions {} distinct years", years.len()));
    }
    let lower = label.to_lowercase();
    let at = lower.find(" and ")?;
    let (left, right) = (&lower[..at], &lower[at + 5..]);
    let verb = |s: &str| s.split(|c: char| !c.is_alphanumeric()).any(verb_like);
    (verb(left) && verb(right)).then(|| "two verb phrases joined by \"and\"".to_owned())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundEvent {
    pub narrative: String,
    pub event: String,
    pub label: String,
    pub kind: BindingKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kg_id: Option<String>,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ambiguity {
    pub narrative: String,
    pub event: String,
    pub label: String,
    /// Every candidate within the gap of the top one.
    pub candidates: Vec<KgCandidate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompoundLabel {
    pub narrative: String,
    pub event: String,
    pub label: String,
    pub reason: String,
}

/// A recursive event whose children reach outside the time of the entity it
/// was bound to. The suggestion is the entity's broader event, if any.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScopeFlag {
    pub narrative: String,
    pub event: String,
    pub kg_id: String,
    pub entity_time: TimeSpec,
    pub children_time: TimeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suggested: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BindReport {
    pub root: String,
    /// Narratives visited, in preorder.
    pub visited: Vec<String>,
    /// Distinct (label, time) searches issued.
    pub searches: usize,
    pub entity_lookups: usize,
    pub bindings: Vec<BoundEvent>,
    pub ambiguities: Vec<Ambiguity>,
    pub compounds: Vec<CompoundLabel>,
    pub scope_flags: Vec<ScopeFlag>,
    /// Imported triples dropped by the viewpoint gate.
    pub dropped_triples: usize,
}

impl BindReport {
    pub fn count(&self, kind: BindingKind) -> usize {
        self.bindings.iter().filter(|b| b.kind == kind).count()
    }
}

/// Bindings by narrative id, then event id.
pub type BindingSet = BTreeMap<String, BTreeMap<String, BindingResult>>;

#[derive(Debug, Clone, PartialEq)]
pub struct BindOutput {
    pub bindings: BindingSet,
    pub report: BindReport,
}

type SearchKey = (String, String);

fn search_key(e: &EventNode) -> SearchKey {
    (e.label.trim().to_owned(), e.time.to_string())
}

/// Binds every event of `narrative_id` and of every narrative reachable from
/// it through η. Only binding annotations change. Nothing is written when a
/// search fails.
pub fn bind_narrative(
    store: &mut NarrativeStore,
    narrative_id: &str,
    source: &dyn KgSource,
    thresholds: &BindThresholds,
) -> Result<BindOutput, BindError> {
    thresholds.validate()?;
    store.narrative(narrative_id)?;
    let visited: Vec<String> = store.eta_closure(narrative_id).into_iter().map(str::to_owned).collect();

    let mut queries: BTreeMap<SearchKey, TimeSpec> = BTreeMap::new();
    for id in &visited {
        for e in store.narrative(id)?.events.values() {
            if !e.label.trim().is_empty() {
                queries.entry(search_key(e)).or_insert_with(|| e.time.clone());
            }
        }
    }
    let found: Vec<(SearchKey, Vec<KgCandidate>)> = queries
        .par_iter()
        .map(|(key, time)| source.search(&key.0, time).map(|c| (key.clone(), c)))
        .collect::<Result<_, _>>()?;
    let found: BTreeMap<SearchKey, Vec<KgCandidate>> = found.into_iter().collect();

    let mut report = BindReport {
        root: narrative_id.to_owned(),
        visited: visited.clone(),
        searches: found.len(),
        ..BindReport::default()
    };
    let mut entities: BTreeMap<String, Option<KgEntity>> = BTreeMap::new();
    let mut bindings = BindingSet::new();

    for id in &visited {
        let narrative = store.narrative(id)?;
        let narrator = narrative.narrator.clone();
        let mut out = BTreeMap::new();
        for e in narrative.events.values() {
            let candidates = found.get(&search_key(e)).map(Vec::as_slice).unwrap_or(&[]);
            let mut result = classify_binding(&e.label, &e.time, candidates, thresholds);
            if let Some(reason) = compound_reason(&e.label) {
                report.compounds.push(CompoundLabel {
                    narrative: id.clone(),
                    event: e.id.clone(),
                    label: e.label.clone(),
                    reason,
                });
            }
            if let [top, second, ..] = candidates {
                if second.score + EPS >= thresholds.indirect && top.score - second.score + EPS < thresholds.gap {
                    report.ambiguities.push(Ambiguity {
                        narrative: id.clone(),
                        event: e.id.clone(),
                        label: e.label.clone(),
                        candidates: candidates
                            .iter()
                            .take_while(|c| top.score - c.score + EPS < thresholds.gap)
                            .cloned()
                            .collect(),
                    });
                }
            }
            match &result.kg_id {
                Some(kg_id) => {
                    if !entities.contains_key(kg_id) {
                        report.entity_lookups += 1;
                        entities.insert(kg_id.clone(), source.entity(kg_id)?);
                    }
                    if let Some(entity) = &entities[kg_id] {
                        for t in entity.import(kg_id) {
                            if gate(store, &narrator, &t) {
                                result.imported.push(t);
                            } else {
                                report.dropped_triples += 1;
                            }
                        }
                    }
                }
                None => {
                    result.virtual_subgraph = Some(virtual_for(store, id, e)?);
                }
            }
            report.bindings.push(BoundEvent {
                narrative: id.clone(),
                event: e.id.clone(),
                label: e.label.clone(),
                kind: result.kind,
                kg_id: result.kg_id.clone(),
                confidence: result.confidence,
            });
            out.insert(e.id.clone(), result);
        }
        bindings.insert(id.clone(), out);
    }

    for id in &visited {
        let narrative = store.narrative(id)?;
        for (event, child) in &narrative.eta {
            let Some(kg_id) = bindings[id].get(event).and_then(|b| b.kg_id.clone()) else {
                continue;
            };
            let Some(Some(entity)) = entities.get(&kg_id) else { continue };
            let Some(entity_time) = entity.time.clone().filter(TimeSpec::is_known) else {
                continue;
            };
            let children = store.narrative(child)?;
            let children_time = TimeSpec::hull(children.events.values().map(|e| &e.time));
            if entity_time.contains(&children_time) == Some(false) {
                report.scope_flags.push(ScopeFlag {
                    narrative: id.clone(),
                    event: event.clone(),
                    kg_id: kg_id.clone(),
                    entity_time,
                    children_time,
                    suggested: entity.parents().next().map(str::to_owned),
                });
            }
        }
    }

    for (id, results) in &bindings {
        let narrative = store.narrative_mut(id)?;
        for (event, result) in results {
            if let Some(e) = narrative.events.get_mut(event) {
                e.binding = Some(result.clone());
            }
        }
    }
    Ok(BindOutput { bindings, report })
}

/// Unattributed triples pass; attributed ones need a viewpoint compatible
/// with the narrator.
fn gate(store: &NarrativeStore, narrator: &str, triple: &ImportedTriple) -> bool {
    match &triple.attribution {
        None => true,
        Some(a) => store.viewpoint_compatible(narrator, a).unwrap_or(false),
    }
}
