//! Comparing narratives mined under different viewpoints: event alignment,
//! shared events, events unique to one narrator and where each narrative
//! starts.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{Category, Direction, Narrative, NarrativeStore, StoreError, TimeSpec};
use crate::semantics::{self, cosine, EmbeddingBackend, SemanticsError};

#[derive(Debug, thiserror::Error)]
pub enum CompareError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error("nothing to compare")]
    NoNarratives,
    #[error("similarity threshold {0} outside [-1, 1]")]
    InvalidThreshold(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompareOptions {
    /// Minimum label cosine for a similarity pair.
    pub sim_threshold: f64,
    /// Also compare the events of each top-level node's child narrative.
    pub flatten: bool,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            sim_threshold: 0.8,
            flatten: false,
        }
    }
}

/// An event as seen by the comparison: where it lives and what identifies it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EventKey {
    pub narrative: String,
    pub event: String,
}

impl std::fmt::Display for EventKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.narrative, self.event)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct EventView {
    key: EventKey,
    label: String,
    kg_id: Option<String>,
}

/// Events of `root`, plus those one η level down when flattening.
fn events_of(store: &NarrativeStore, root: &str, flatten: bool) -> Result<Vec<EventView>, StoreError> {
    let n = store.narrative(root)?;
    let mut narratives = vec![n];
    if flatten {
        for child in n.eta.values() {
            narratives.push(store.narrative(child)?);
        }
    }
    let mut out: Vec<EventView> = narratives
        .into_iter()
        .flat_map(|n| {
            n.events.values().map(|e| EventView {
                key: EventKey {
                    narrative: n.id.clone(),
                    event: e.id.clone(),
                },
                label: e.label.clone(),
                kg_id: e.binding.as_ref().and_then(|b| b.kg_id.clone()),
            })
        })
        .collect();
    out.sort_by(|a, b| a.key.cmp(&b.key));
    out.dedup_by(|a, b| a.key == b.key);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlignBasis {
    SharedBinding,
    Similarity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedPair {
    pub left: EventKey,
    pub right: EventKey,
    pub basis: AlignBasis,
    pub score: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EventAlignment {
    pub pairs: Vec<AlignedPair>,
}

impl EventAlignment {
    /// The same pairs seen from the other side.
    pub fn flipped(&self) -> EventAlignment {
        let mut pairs: Vec<AlignedPair> = self
            .pairs
            .iter()
            .map(|p| AlignedPair {
                left: p.right.clone(),
                right: p.left.clone(),
                basis: p.basis,
                score: p.score,
            })
            .collect();
        pairs.sort_by(|a, b| a.left.cmp(&b.left).then_with(|| a.right.cmp(&b.right)));
        EventAlignment { pairs }
    }

    pub fn left_keys(&self) -> BTreeSet<&EventKey> {
        self.pairs.iter().map(|p| &p.left).collect()
    }

    pub fn right_keys(&self) -> BTreeSet<&EventKey> {
        self.pairs.iter().map(|p| &p.right).collect()
    }
}

type Vectors = BTreeMap<String, Vec<f64>>;

fn embed_labels<'a>(
    embed: &dyn EmbeddingBackend,
    labels: impl IntoIterator<Item = &'a str>,
) -> Result<Vectors, SemanticsError> {
    let distinct: Vec<&str> = labels.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
    if distinct.is_empty() {
        return Ok(Vectors::new());
    }
    let vectors = semantics::embed(embed, &distinct)?;
    Ok(distinct.into_iter().map(str::to_owned).zip(vectors).collect())
}

/// Order-independent tie-break key for a candidate pair.
fn unordered<'a>(a: &'a EventKey, b: &'a EventKey) -> (&'a EventKey, &'a EventKey) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn align(left: &[EventView], right: &[EventView], vectors: &Vectors, threshold: f64) -> Result<EventAlignment, SemanticsError> {
    let mut pairs = Vec::new();
    let mut used_l = BTreeSet::new();
    let mut used_r = BTreeSet::new();

    // events bound to the same entity pair up in key order
    let mut by_kg: BTreeMap<&str, (Vec<&EventView>, Vec<&EventView>)> = BTreeMap::new();
    for e in left {
        if let Some(k) = &e.kg_id {
            by_kg.entry(k).or_default().0.push(e);
        }
    }
    for e in right {
        if let Some(k) = &e.kg_id {
            by_kg.entry(k).or_default().1.push(e);
        }
    }
    for (ls, rs) in by_kg.values() {
        for (l, r) in ls.iter().zip(rs) {
            used_l.insert(&l.key);
            used_r.insert(&r.key);
            pairs.push(AlignedPair {
                left: l.key.clone(),
                right: r.key.clone(),
                basis: AlignBasis::SharedBinding,
                score: 1.0,
            });
        }
    }

    let mut scored = Vec::new();
    for l in left.iter().filter(|e| !used_l.contains(&e.key)) {
        for r in right.iter().filter(|e| !used_r.contains(&e.key)) {
            let s = cosine(&vectors[&l.label], &vectors[&r.label])?;
            if s >= threshold {
                scored.push((s, l, r));
            }
        }
    }
    scored.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then_with(|| unordered(&a.1.key, &a.2.key).cmp(&unordered(&b.1.key, &b.2.key)))
    });
    for (s, l, r) in scored {
        if used_l.contains(&l.key) || used_r.contains(&r.key) {
            continue;
        }
        used_l.insert(&l.key);
        used_r.insert(&r.key);
        pairs.push(AlignedPair {
            left: l.key.clone(),
            right: r.key.clone(),
            basis: AlignBasis::Similarity,
            score: s,
        });
    }
    pairs.sort_by(|a, b| a.left.cmp(&b.left).then_with(|| a.right.cmp(&b.right)));
    Ok(EventAlignment { pairs })
}

fn check(options: &CompareOptions) -> Result<(), CompareError> {
    if (-1.0..=1.0).contains(&options.sim_threshold) {
        Ok(())
    } else {
        Err(CompareError::InvalidThreshold(options.sim_threshold))
    }
}

/// One-to-one pairing of the events of two narratives: shared knowledge-graph
/// bindings first, then greedy label similarity.
pub fn align_events(
    store: &NarrativeStore,
    n1: &str,
    n2: &str,
    embed: &dyn EmbeddingBackend,
    options: &CompareOptions,
) -> Result<EventAlignment, CompareError> {
    check(options)?;
    let (a, b) = (events_of(store, n1, options.flatten)?, events_of(store, n2, options.flatten)?);
    let vectors = embed_labels(embed, a.iter().chain(&b).map(|e| e.label.as_str()))?;
    Ok(align(&a, &b, &vectors, options.sim_threshold)?)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupMember {
    /// The compared narrative the event belongs to.
    pub root: String,
    pub viewpoint: String,
    pub event: EventKey,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EventGroup {
    pub members: Vec<GroupMember>,
}

impl EventGroup {
    pub fn labels(&self) -> BTreeSet<&str> {
        self.members.iter().map(|m| m.label.as_str()).collect()
    }
}

struct Side {
    root: String,
    viewpoint: String,
    events: Vec<EventView>,
}

fn sides(store: &NarrativeStore, ids: &[&str], flatten: bool) -> Result<Vec<Side>, CompareError> {
    if ids.is_empty() {
        return Err(CompareError::NoNarratives);
    }
    let mut roots: Vec<&str> = ids.to_vec();
    roots.sort_unstable();
    roots.dedup();
    roots
        .into_iter()
        .map(|id| {
            Ok(Side {
                root: id.to_owned(),
                viewpoint: store.narrative(id)?.narrator.clone(),
                events: events_of(store, id, flatten)?,
            })
        })
        .collect()
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn groups_of(sides: &[Side], vectors: &Vectors, threshold: f64) -> Result<Vec<EventGroup>, SemanticsError> {
    let mut index = Vec::new();
    let mut position = BTreeMap::new();
    for (s, side) in sides.iter().enumerate() {
        for e in &side.events {
            position.insert((s, e.key.clone()), index.len());
            index.push((s, e));
        }
    }
    let mut parent: Vec<usize> = (0..index.len()).collect();
    for i in 0..sides.len() {
        for j in i + 1..sides.len() {
            for p in align(&sides[i].events, &sides[j].events, vectors, threshold)?.pairs {
                let (a, b) = (position[&(i, p.left)], position[&(j, p.right)]);
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<GroupMember>> = BTreeMap::new();
    for (i, (s, e)) in index.iter().enumerate() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(GroupMember {
            root: sides[*s].root.clone(),
            viewpoint: sides[*s].viewpoint.clone(),
            event: e.key.clone(),
            label: e.label.clone(),
        });
    }
    let mut out: Vec<EventGroup> = groups
        .into_values()
        .map(|mut members| {
            members.sort();
            EventGroup { members }
        })
        .collect();
    out.sort();
    Ok(out)
}

fn covers_all(group: &EventGroup, sides: &[Side]) -> bool {
    let roots: BTreeSet<&str> = group.members.iter().map(|m| m.root.as_str()).collect();
    sides.iter().all(|s| roots.contains(s.root.as_str()))
}

/// Groups of aligned events (transitively) that occur in every input
/// narrative.
pub fn commonalities(
    store: &NarrativeStore,
    ids: &[&str],
    embed: &dyn EmbeddingBackend,
    options: &CompareOptions,
) -> Result<Vec<EventGroup>, CompareError> {
    check(options)?;
    let sides = sides(store, ids, options.flatten)?;
    let vectors = embed_labels(embed, sides.iter().flat_map(|s| &s.events).map(|e| e.label.as_str()))?;
    Ok(groups_of(&sides, &vectors, options.sim_threshold)?
        .into_iter()
        .filter(|g| covers_all(g, &sides))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UniqueEvent {
    pub viewpoint: String,
    pub event: EventKey,
    pub label: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Differences {
    pub left: Vec<UniqueEvent>,
    pub right: Vec<UniqueEvent>,
}

fn unique(side: &Side, covered: &BTreeSet<&EventKey>) -> Vec<UniqueEvent> {
    side.events
        .iter()
        .filter(|e| !covered.contains(&e.key))
        .map(|e| UniqueEvent {
            viewpoint: side.viewpoint.clone(),
            event: e.key.clone(),
            label: e.label.clone(),
        })
        .collect()
}

/// Events of each narrative that the alignment leaves unpaired.
pub fn differences(
    store: &NarrativeStore,
    n1: &str,
    n2: &str,
    embed: &dyn EmbeddingBackend,
    options: &CompareOptions,
) -> Result<Differences, CompareError> {
    check(options)?;
    let left = Side {
        root: n1.to_owned(),
        viewpoint: store.narrative(n1)?.narrator.clone(),
        events: events_of(store, n1, options.flatten)?,
    };
    let right = Side {
        root: n2.to_owned(),
        viewpoint: store.narrative(n2)?.narrator.clone(),
        events: events_of(store, n2, options.flatten)?,
    };
    let vectors = embed_labels(embed, left.events.iter().chain(&right.events).map(|e| e.label.as_str()))?;
    let alignment = align(&left.events, &right.events, &vectors, options.sim_threshold)?;
    Ok(Differences {
        left: unique(&left, &alignment.left_keys()),
        right: unique(&right, &alignment.right_keys()),
    })
}

/// For every temporally ordered edge, the (earlier, later) event pair.
fn precedence(store: &NarrativeStore, n: &Narrative) -> Vec<(String, String)> {
    n.narrative_edges
        .iter()
        .filter_map(|e| {
            let p = store.relations().predicate(&e.predicate)?;
            if !p.category.entails(Category::Temporal) {
                return None;
            }
            match p.direction {
                Direction::Forward => Some((e.source.clone(), e.target.clone())),
                Direction::Backward => Some((e.target.clone(), e.source.clone())),
                Direction::Unordered => None,
            }
        })
        .collect()
}

/// The event the narrative starts from: no temporal edge puts anything
/// before it, and it is the earliest such event. `None` when the candidates
/// cannot be told apart (unknown or equal earliest times) or there are none.
pub fn narrative_start(store: &NarrativeStore, narrative_id: &str) -> Result<Option<String>, CompareError> {
    let n = store.narrative(narrative_id)?;
    let later: BTreeSet<String> = precedence(store, n).into_iter().map(|(_, l)| l).collect();
    let sources: Vec<_> = n.events.values().filter(|e| !later.contains(&e.id)).collect();
    match sources.as_slice() {
        [] => Ok(None),
        [only] => Ok(Some(only.id.clone())),
        many => {
            if many.iter().any(|e| !e.time.is_known()) {
                return Ok(None);
            }
            let start = |t: &TimeSpec| t.range().map(|(s, _)| s);
            let earliest = many.iter().filter_map(|e| start(&e.time)).min();
            let first: Vec<_> = many.iter().filter(|e| start(&e.time) == earliest).collect();
            Ok(match first.as_slice() {
                [one] => Some(one.id.clone()),
                _ => None,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NarrativeSummary {
    pub narrative: String,
    pub viewpoint: String,
    pub events: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<EventKey>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub left: String,
    pub right: String,
    pub alignment: EventAlignment,
    pub differences: Differences,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub options: CompareOptions,
    pub narratives: Vec<NarrativeSummary>,
    /// Event groups present in every narrative.
    pub common: Vec<EventGroup>,
    /// All groups, including those missing from some narratives.
    pub groups: Vec<EventGroup>,
    pub pairs: Vec<PairReport>,
}

pub fn compare(
    store: &NarrativeStore,
    ids: &[&str],
    embed: &dyn EmbeddingBackend,
    options: &CompareOptions,
) -> Result<ComparisonReport, CompareError> {
    check(options)?;
    let sides = sides(store, ids, options.flatten)?;
    let vectors = embed_labels(embed, sides.iter().flat_map(|s| &s.events).map(|e| e.label.as_str()))?;
    let groups = groups_of(&sides, &vectors, options.sim_threshold)?;
    let common = groups.iter().filter(|g| covers_all(g, &sides)).cloned().collect();
    let mut narratives = Vec::new();
    for s in &sides {
        let start = narrative_start(store, &s.root)?;
        let n = store.narrative(&s.root)?;
        narratives.push(NarrativeSummary {
            narrative: s.root.clone(),
            viewpoint: s.viewpoint.clone(),
            events: s.events.len(),
            start_label: start.as_ref().map(|e| n.events[e].label.clone()),
            start: start.map(|event| EventKey {
                narrative: s.root.clone(),
                event,
            }),
        });
    }
    let mut pairs = Vec::new();
    for i in 0..sides.len() {
        for j in i + 1..sides.len() {
            let alignment = align(&sides[i].events, &sides[j].events, &vectors, options.sim_threshold)?;
            let differences = Differences {
                left: unique(&sides[i], &alignment.left_keys()),
                right: unique(&sides[j], &alignment.right_keys()),
            };
            pairs.push(PairReport {
                left: sides[i].root.clone(),
                right: sides[j].root.clone(),
                alignment,
                differences,
            });
        }
    }
    Ok(ComparisonReport {
        options: *options,
        narratives,
        common,
        groups,
        pairs,
    })
}
