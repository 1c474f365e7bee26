//! Narrative mining: event detection, timeline extraction, pairwise matching,
//! synthesis and recursion over one viewpoint's documents.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::ids;
use crate::llm::{CompletionBackend, LabeledEvent, LabeledEventRef, LlmError, LlmTasks, TemplateSet};
use crate::model::{
    EventNode, Narrative, NarrativeEdge, NarrativeStore, Provenance, StoreError, TimeKind, TimeSpec, HAPPENED_AFTER,
};
use crate::semantics::{self, hdbscan, merge_clusters, EmbeddingBackend, HdbscanParams, MergeStep, SemanticsError, NOISE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoisePolicy {
    Drop,
    #[default]
    Singleton,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MineConfig {
    pub event_name: String,
    pub timespan: TimeSpec,
    pub viewpoint: String,
    #[serde(default = "default_depth")]
    pub max_recursion_depth: usize,
    #[serde(default)]
    pub hdbscan: HdbscanParams,
    #[serde(default = "default_merge_threshold")]
    pub merge_threshold: f64,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    #[serde(default)]
    pub noise: NoisePolicy,
    /// Predicates offered to the model when relating adjacent events.
    #[serde(default = "default_candidates")]
    pub relation_candidates: Vec<String>,
}

fn default_depth() -> usize {
    1
}

fn default_merge_threshold() -> f64 {
    0.8
}

fn default_concurrency() -> usize {
    4
}

fn default_candidates() -> Vec<String> {
    vec![HAPPENED_AFTER.to_owned()]
}

impl MineConfig {
    pub fn new(event_name: &str, timespan: TimeSpec, viewpoint: &str) -> Self {
        Self {
            event_name: event_name.to_owned(),
            timespan,
            viewpoint: viewpoint.to_owned(),
            max_recursion_depth: default_depth(),
            hdbscan: HdbscanParams::default(),
            merge_threshold: default_merge_threshold(),
            concurrency: default_concurrency(),
            noise: NoisePolicy::default(),
            relation_candidates: default_candidates(),
        }
    }

    pub fn validate(&self, store: &NarrativeStore) -> Result<(), MineError> {
        let bad = |m: String| Err(MineError::InvalidConfig(m));
        if self.event_name.trim().is_empty() {
            return bad("event name is empty".into());
        }
        if self.timespan.kind != TimeKind::Interval || self.timespan.check().is_err() {
            return bad(format!("timespan must be an interval, got {}", self.timespan));
        }
        self.hdbscan.validate()?;
        if !(-1.0..=1.0).contains(&self.merge_threshold) {
            return Err(SemanticsError::InvalidThreshold(self.merge_threshold).into());
        }
        if self.concurrency == 0 {
            return bad("concurrency must be at least 1".into());
        }
        for c in &self.relation_candidates {
            if store.relations().predicate(c).is_none() {
                return Err(StoreError::UnknownPredicate(c.clone()).into());
            }
        }
        store.viewpoint(&self.viewpoint)?;
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum MineError {
    #[error("no documents for viewpoint {0:?}")]
    EmptyViewpointCollection(String),
    #[error("no document passed event detection for {0:?}")]
    NoDocumentsDetected(String),
    #[error("invalid mining configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// The backends and prompt templates a mining run talks to.
#[derive(Clone, Copy)]
pub struct Backends<'a> {
    pub llm: &'a dyn CompletionBackend,
    pub embed: &'a dyn EmbeddingBackend,
    pub templates: &'a TemplateSet,
}

impl<'a> Backends<'a> {
    fn tasks(&self) -> LlmTasks<'a> {
        LlmTasks::new(self.llm, self.templates)
    }
}

/// Events extracted from one document, in the order the model listed them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timeline {
    pub document: String,
    pub events: Vec<LabeledEvent>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedDocument {
    pub document: String,
    pub stage: String,
    pub error: String,
}

/// Counts for one run of the pipeline (the top level or one recursive node).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub narrative: String,
    pub event_name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parent_event: Option<String>,
    pub depth: usize,
    pub documents_considered: usize,
    pub documents_detected: usize,
    pub timelines: usize,
    pub timeline_events: usize,
    pub excluded_labels: usize,
    pub clusters: usize,
    pub clustered_points: usize,
    pub noise: usize,
    pub candidate_events: usize,
    pub merges: Vec<MergeStep>,
    pub events: usize,
    pub relations: usize,
    pub skipped: Vec<SkippedDocument>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum RecursionOutcome {
    Child { narrative: String, events: usize },
    NoDocuments,
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecursionStep {
    pub narrative: String,
    pub event: String,
    pub label: String,
    pub depth: usize,
    #[serde(flatten)]
    pub outcome: RecursionOutcome,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MiningReport {
    pub narrative: String,
    pub viewpoint: String,
    pub event_name: String,
    pub levels: Vec<LevelReport>,
    pub recursion: Vec<RecursionStep>,
    /// Events left unexpanded because they sit at the depth bound.
    pub depth_limited: usize,
    pub timings_ms: BTreeMap<String, u64>,
}

impl MiningReport {
    fn time(&mut self, stage: &str, d: Duration) {
        *self.timings_ms.entry(stage.to_owned()).or_default() += d.as_millis() as u64;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PooledEvent {
    pub document: String,
    /// Position in the document's timeline.
    pub index: usize,
    pub event: LabeledEvent,
}

/// Result of pooling every timeline event and clustering the labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    pub pool: Vec<PooledEvent>,
    pub vectors: Vec<Vec<f64>>,
    /// Candidate events as pool indices, ordered by smallest member.
    pub clusters: Vec<Vec<usize>>,
    /// Size of the density clusters before noise handling.
    pub dense_clusters: usize,
    pub noise: usize,
}

/// Pools all timeline events, embeds their labels and clusters them. Noise
/// points become singleton candidates or are dropped, per `noise`.
pub fn pairwise_match(
    timelines: &[Timeline],
    embed: &dyn EmbeddingBackend,
    params: &HdbscanParams,
    noise: NoisePolicy,
) -> Result<Matching, MineError> {
    if timelines.is_empty() {
        return Err(SemanticsError::EmptyInput.into());
    }
    params.validate()?;
    let pool: Vec<PooledEvent> = timelines
        .iter()
        .flat_map(|t| {
            t.events.iter().enumerate().map(|(index, e)| PooledEvent {
                document: t.document.clone(),
                index,
                event: e.clone(),
            })
        })
        .collect();
    if pool.is_empty() {
        return Ok(Matching {
            pool,
            vectors: Vec::new(),
            clusters: Vec::new(),
            dense_clusters: 0,
            noise: 0,
        });
    }
    let labels: Vec<&str> = pool.iter().map(|p| p.event.label.as_str()).collect();
    let vectors = semantics::embed(embed, &labels)?;
    let result = hdbscan(&vectors, params)?;
    let noise_points: Vec<usize> = (0..pool.len()).filter(|&i| result.labels[i] == NOISE).collect();
    let mut clusters = result.clusters.clone();
    if noise == NoisePolicy::Singleton {
        clusters.extend(noise_points.iter().map(|&i| vec![i]));
        clusters.sort_by_key(|c| c[0]);
    }
    Ok(Matching {
        dense_clusters: result.clusters.len(),
        noise: noise_points.len(),
        pool,
        vectors,
        clusters,
    })
}

/// Events and edges synthesized from matched clusters, not yet in a store.
#[derive(Debug, Clone, PartialEq)]
pub struct Fragment {
    pub events: Vec<EventNode>,
    pub edges: Vec<NarrativeEdge>,
    pub merges: Vec<MergeStep>,
    pub warnings: Vec<String>,
}

fn char_span(body: &str, sentence: &str) -> Option<(usize, usize)> {
    let at = body.find(sentence)?;
    let start = body[..at].chars().count();
    Some((start, start + sentence.chars().count()))
}

/// Merges similar clusters, labels each with one event and relates events
/// that are adjacent in time. Edges point from the later event to the
/// earlier one, e.g. `⟨later, happened after, earlier⟩`.
pub fn synthesize(
    matching: &Matching,
    tasks: &LlmTasks<'_>,
    merge_threshold: f64,
    candidates: &[String],
    narrative_id: &str,
    documents: &BTreeMap<&str, &Document>,
) -> Result<Fragment, MineError> {
    let outcome = merge_clusters(&matching.clusters, &matching.vectors, merge_threshold)?;
    let mut warnings = Vec::new();
    let mut events = Vec::with_capacity(outcome.clusters.len());
    for (_, members) in &outcome.clusters {
        let member_events: Vec<&PooledEvent> = members.iter().map(|&m| &matching.pool[m]).collect();
        let pairs: Vec<(String, TimeSpec)> = member_events
            .iter()
            .map(|p| (p.event.label.clone(), p.event.time.clone()))
            .collect();
        let (label, time) = match tasks.synthesize_label(&pairs) {
            Ok(lt) => lt,
            Err(e) if e.is_backend_failure() => return Err(e.into()),
            Err(e) => {
                warnings.push(format!("synthesis fell back to first member label: {e}"));
                (pairs[0].0.clone(), TimeSpec::hull(pairs.iter().map(|p| &p.1)))
            }
        };
        let sources: Vec<String> = member_events.iter().map(|p| format!("{}#{}", p.document, p.index)).collect();
        let mut parts: Vec<&str> = vec![narrative_id];
        parts.extend(sources.iter().map(String::as_str));
        let mut node = EventNode::new(ids::short_id("ev", &parts), label, time);
        let mut provenance: BTreeSet<Provenance> = BTreeSet::new();
        for p in &member_events {
            let sentence = documents
                .get(p.document.as_str())
                .and_then(|d| char_span(&d.body, &p.event.sentence));
            provenance.insert(Provenance {
                document: p.document.clone(),
                sentence,
            });
        }
        node.provenance = provenance.into_iter().collect();
        events.push(node);
    }
    events.sort_by(|a, b| a.time.sort_key().cmp(&b.time.sort_key()).then(a.id.cmp(&b.id)));

    let mut edges = Vec::new();
    for pair in events.windows(2) {
        let (earlier, later) = (&pair[0], &pair[1]);
        let a = LabeledEventRef { label: &later.label, time: &later.time };
        let b = LabeledEventRef { label: &earlier.label, time: &earlier.time };
        match tasks.infer_relation(&a, &b, candidates) {
            Ok(Some(p)) => edges.push(NarrativeEdge {
                source: later.id.clone(),
                predicate: p,
                target: earlier.id.clone(),
            }),
            Ok(None) => {}
            Err(e) if e.is_backend_failure() => return Err(e.into()),
            Err(e) => warnings.push(format!("no relation between {:?} and {:?}: {e}", later.label, earlier.label)),
        }
    }
    Ok(Fragment {
        events,
        edges,
        merges: outcome.log,
        warnings,
    })
}

enum DocOutcome {
    NotDetected,
    Timeline(Timeline),
    Skipped(SkippedDocument, Option<LlmError>),
}

fn process_document(
    tasks: &LlmTasks<'_>,
    doc: &Document,
    event_name: &str,
    parent: Option<&str>,
    timespan: &TimeSpec,
) -> DocOutcome {
    let skip = |stage: &str, e: LlmError| {
        tracing::warn!(document = %doc.id, stage, error = %e, "skipping document");
        let skipped = SkippedDocument {
            document: doc.id.clone(),
            stage: stage.to_owned(),
            error: e.to_string(),
        };
        DocOutcome::Skipped(skipped, e.is_backend_failure().then_some(e))
    };
    match tasks.detect_event(doc, event_name, timespan, parent) {
        Ok(true) => {}
        Ok(false) => return DocOutcome::NotDetected,
        Err(e) => return skip("detection", e),
    }
    let empty = || {
        DocOutcome::Timeline(Timeline {
            document: doc.id.clone(),
            events: Vec::new(),
        })
    };
    let sentences = match tasks.extract_timeline_raw(doc, event_name) {
        Ok(s) => s,
        Err(LlmError::EmptyTimeline) => return empty(),
        Err(e) => return skip("extraction", e),
    };
    let labeled = match tasks.label_events(&sentences) {
        Ok(l) => l,
        Err(e) => return skip("labeling", e),
    };
    match tasks.verify_timeline(&labeled, doc, timespan) {
        Ok(events) => DocOutcome::Timeline(Timeline {
            document: doc.id.clone(),
            events,
        }),
        Err(e) => skip("verification", e),
    }
}

struct Level {
    narrative: Narrative,
    report: LevelReport,
}

struct Run<'a> {
    config: &'a MineConfig,
    documents: Vec<&'a Document>,
    by_id: BTreeMap<&'a str, &'a Document>,
    backends: Backends<'a>,
    pool: rayon::ThreadPool,
}

impl<'a> Run<'a> {
    fn new(config: &'a MineConfig, corpus: &'a [Document], backends: Backends<'a>) -> Result<Self, MineError> {
        let mut documents: Vec<&Document> = corpus.iter().filter(|d| d.viewpoint == config.viewpoint).collect();
        if documents.is_empty() {
            return Err(MineError::EmptyViewpointCollection(config.viewpoint.clone()));
        }
        documents.sort_by(|a, b| a.id.cmp(&b.id));
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.concurrency)
            .build()
            .map_err(|e| MineError::InvalidConfig(e.to_string()))?;
        let by_id = documents.iter().map(|d| (d.id.as_str(), *d)).collect();
        Ok(Self {
            config,
            documents,
            by_id,
            backends,
            pool,
        })
    }

    /// One pass of the pipeline for `event_name`. Labels in `exclude`
    /// (lowercase) are removed from the timelines.
    fn level(
        &self,
        narrative_id: &str,
        event_name: &str,
        parent: Option<&str>,
        exclude: &BTreeSet<String>,
        depth: usize,
        report: &mut MiningReport,
    ) -> Result<Level, MineError> {
        let tasks = self.backends.tasks();
        let mut lr = LevelReport {
            narrative: narrative_id.to_owned(),
            event_name: event_name.to_owned(),
            parent_event: parent.map(str::to_owned),
            depth,
            documents_considered: self.documents.len(),
            ..LevelReport::default()
        };

        let started = Instant::now();
        let outcomes: Vec<DocOutcome> = self.pool.install(|| {
            self.documents
                .par_iter()
                .map(|d| process_document(&tasks, d, event_name, parent, &self.config.timespan))
                .collect()
        });
        report.time("documents", started.elapsed());

        let mut timelines = Vec::new();
        let mut backend_failure = None;
        for outcome in outcomes {
            match outcome {
                DocOutcome::NotDetected => {}
                DocOutcome::Skipped(s, e) => {
                    lr.skipped.push(s);
                    backend_failure = backend_failure.or(e);
                }
                DocOutcome::Timeline(mut t) => {
                    lr.documents_detected += 1;
                    let before = t.events.len();
                    t.events.retain(|e| !exclude.contains(&e.label.to_lowercase()));
                    lr.excluded_labels += before - t.events.len();
                    if !t.events.is_empty() {
                        lr.timelines += 1;
                        lr.timeline_events += t.events.len();
                        timelines.push(t);
                    }
                }
            }
        }
        if lr.documents_detected == 0 {
            // nothing detected because the backend is down is not a finding
            if let Some(e) = backend_failure {
                return Err(e.into());
            }
            return Err(MineError::NoDocumentsDetected(event_name.to_owned()));
        }

        let mut narrative = Narrative::new(narrative_id, &self.config.viewpoint);
        narrative.topic = Some(event_name.to_owned());
        if timelines.is_empty() {
            return Ok(Level { narrative, report: lr });
        }

        let started = Instant::now();
        let matching = pairwise_match(&timelines, self.backends.embed, &self.config.hdbscan, self.config.noise)?;
        report.time("matching", started.elapsed());
        lr.clusters = matching.dense_clusters;
        lr.noise = matching.noise;
        lr.clustered_points = matching.pool.len() - matching.noise;
        lr.candidate_events = matching.clusters.len();

        let started = Instant::now();
        let fragment = synthesize(
            &matching,
            &tasks,
            self.config.merge_threshold,
            &self.config.relation_candidates,
            narrative_id,
            &self.by_id,
        )?;
        report.time("synthesis", started.elapsed());
        lr.merges = fragment.merges;
        lr.warnings.extend(fragment.warnings);
        lr.events = fragment.events.len();
        lr.relations = fragment.edges.len();
        for event in fragment.events {
            let id = event.id.clone();
            narrative
                .add_event(event)
                .map_err(|_| MineError::InvalidConfig(format!("duplicate event id {id}")))?;
        }
        narrative.narrative_edges = fragment.edges;
        Ok(Level { narrative, report: lr })
    }
}

/// Id of the top-level narrative mined for an event and viewpoint.
pub fn narrative_id(config: &MineConfig) -> String {
    ids::short_id("nar", &[&config.viewpoint, &config.event_name, &config.timespan.to_string()])
}

fn child_id(parent: &str, event: &str) -> String {
    ids::short_id("nar", &[parent, event])
}

/// Removes a narrative and everything reachable from it through η.
pub fn remove_subtree(store: &mut NarrativeStore, root: &str) -> Result<Vec<String>, StoreError> {
    let order: Vec<String> = store.eta_closure(root).into_iter().map(str::to_owned).collect();
    for id in &order {
        if store.narrative(id).is_ok() {
            store.remove_narrative(id)?;
        }
    }
    Ok(order)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MineOutput {
    pub narrative: String,
    pub report: MiningReport,
}

/// Mines the narrative of `config.event_name` from the viewpoint's documents
/// and expands its events recursively. A narrative mined earlier with the same
/// id is replaced together with its η descendants.
pub fn mine(
    config: &MineConfig,
    store: &mut NarrativeStore,
    corpus: &[Document],
    backends: Backends<'_>,
) -> Result<MineOutput, MineError> {
    config.validate(store)?;
    let run = Run::new(config, corpus, backends)?;
    let id = narrative_id(config);
    let mut report = MiningReport {
        narrative: id.clone(),
        viewpoint: config.viewpoint.clone(),
        event_name: config.event_name.clone(),
        ..MiningReport::default()
    };
    let exclude = BTreeSet::new();
    let level = run.level(&id, &config.event_name, None, &exclude, 0, &mut report)?;
    report.levels.push(level.report);
    if store.narrative(&id).is_ok() {
        remove_subtree(store, &id)?;
    }
    store.insert_narrative(level.narrative)?;
    expand(&run, store, &id, vec![config.event_name.clone()], 0, &mut report)?;
    Ok(MineOutput { narrative: id, report })
}

/// Expands the leaf events of an existing narrative, up to the configured
/// depth. The narrative counts as depth 0 and its topic as the parent event.
pub fn recurse(
    narrative_id: &str,
    config: &MineConfig,
    store: &mut NarrativeStore,
    corpus: &[Document],
    backends: Backends<'_>,
) -> Result<MiningReport, MineError> {
    config.validate(store)?;
    let topic = store
        .narrative(narrative_id)?
        .topic
        .clone()
        .unwrap_or_else(|| config.event_name.clone());
    let run = Run::new(config, corpus, backends)?;
    let mut report = MiningReport {
        narrative: narrative_id.to_owned(),
        viewpoint: config.viewpoint.clone(),
        event_name: topic.clone(),
        ..MiningReport::default()
    };
    expand(&run, store, narrative_id, vec![topic], 0, &mut report)?;
    Ok(report)
}

/// `path` holds the event names from the root down to this narrative's topic.
fn expand(
    run: &Run<'_>,
    store: &mut NarrativeStore,
    narrative_id: &str,
    path: Vec<String>,
    depth: usize,
    report: &mut MiningReport,
) -> Result<(), MineError> {
    let leaves: Vec<(String, String)> = {
        let n = store.narrative(narrative_id)?;
        n.events_by_time()
            .into_iter()
            .filter(|e| !n.is_recursive(&e.id))
            .map(|e| (e.id.clone(), e.label.clone()))
            .collect()
    };
    if depth >= run.config.max_recursion_depth {
        report.depth_limited += leaves.len();
        return Ok(());
    }
    let parent_event = path.last().cloned();
    for (event_id, label) in leaves {
        let child = child_id(narrative_id, &event_id);
        let mut exclude: BTreeSet<String> = path.iter().map(|p| p.to_lowercase()).collect();
        exclude.insert(label.to_lowercase());
        let step = |outcome| RecursionStep {
            narrative: narrative_id.to_owned(),
            event: event_id.clone(),
            label: label.clone(),
            depth: depth + 1,
            outcome,
        };
        let level = match run.level(&child, &label, parent_event.as_deref(), &exclude, depth + 1, report) {
            Ok(level) => level,
            Err(MineError::NoDocumentsDetected(_)) => {
                report.recursion.push(step(RecursionOutcome::NoDocuments));
                continue;
            }
            Err(e) => return Err(e),
        };
        let events = level.narrative.events.len();
        report.levels.push(level.report);
        if events == 0 {
            report.recursion.push(step(RecursionOutcome::Empty));
            continue;
        }
        if store.narrative(&child).is_ok() {
            remove_subtree(store, &child)?;
        }
        store.insert_narrative(level.narrative)?;
        store.set_eta(narrative_id, &event_id, &child)?;
        report.recursion.push(step(RecursionOutcome::Child {
            narrative: child.clone(),
            events,
        }));
        let mut child_path = path.clone();
        child_path.push(label);
        expand(run, store, &child, child_path, depth + 1, report)?;
    }
    Ok(())
}
