//! The subcommands. Each returns the text for stdout; failures carry the
//! exit code they map to.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, Context};
use narrmine_core::binder::{bind_narrative, BindError, KgSnapshot, LiveSource, SnapshotSource};
use narrmine_core::compare::{compare, CompareError, CompareOptions};
use narrmine_core::corpus::{self, ingest, CorpusManifest, Document, IngestOptions, RejectReason};
use narrmine_core::export::{comparison_dot, narrative_json};
use narrmine_core::llm::{CachedBackend, CompletionBackend, HttpChatBackend, LlmError, MockBackend, ResponseCache, TemplateSet};
use narrmine_core::miner::{mine, Backends, MineConfig, MineError};
use narrmine_core::semantics::{EmbeddingBackend, FixtureTable, HttpEmbedder, SemanticsError};
use narrmine_core::{ids, to_canonical_string, BindingKind, NarrativeStore, RelationEntry, StoreError, TimeSpec, Viewpoint};

use crate::config::{Config, EmbeddingKind, LlmKind, SourceKind, API_KEY_ENV};
use crate::layout::{write_atomic, ProjectLayout};

/// Why a command failed: bad input (exit 1) or an unavailable backend (exit 2).
#[derive(Debug)]
pub enum Failure {
    User(anyhow::Error),
    Backend(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::User(_) => 1,
            Failure::Backend(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let e = match self {
            Failure::User(e) | Failure::Backend(e) => e,
        };
        // one line: the error chain joined with ": "
        let chain: Vec<String> = e.chain().map(|c| c.to_string().replace('\n', " ")).collect();
        write!(f, "{}", chain.join(": "))
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::User(e)
    }
}

fn semantics_failure(e: &SemanticsError) -> bool {
    matches!(e, SemanticsError::BackendUnavailable(_) | SemanticsError::UnknownText(_))
}

impl From<MineError> for Failure {
    fn from(e: MineError) -> Self {
        let backend = match &e {
            MineError::Llm(l) => l.is_backend_failure(),
            MineError::Semantics(s) => semantics_failure(s),
            _ => false,
        };
        if backend {
            Failure::Backend(e.into())
        } else {
            Failure::User(e.into())
        }
    }
}

impl From<BindError> for Failure {
    fn from(e: BindError) -> Self {
        match e {
            BindError::SourceUnavailable(_) => Failure::Backend(e.into()),
            _ => Failure::User(e.into()),
        }
    }
}

impl From<CompareError> for Failure {
    fn from(e: CompareError) -> Self {
        match &e {
            CompareError::Semantics(s) if semantics_failure(s) => Failure::Backend(e.into()),
            _ => Failure::User(e.into()),
        }
    }
}

impl From<StoreError> for Failure {
    fn from(e: StoreError) -> Self {
        Failure::User(e.into())
    }
}

pub type Outcome = Result<String, Failure>;

/// A loaded project: layout, config and the viewpoints it knows.
pub struct Project {
    pub layout: ProjectLayout,
    pub config: Config,
}

impl Project {
    pub fn open(root: &Path) -> Result<Self, Failure> {
        if !root.is_dir() {
            return Err(Failure::User(anyhow!("project directory {} does not exist", root.display())));
        }
        let layout = ProjectLayout::new(root);
        let config = Config::load(&layout.config())?;
        Ok(Self { layout, config })
    }

    fn documents(&self) -> Result<Vec<Document>, Failure> {
        let path = self.layout.documents();
        if !path.exists() {
            return Err(Failure::User(anyhow!("no ingested corpus at {}; run `narrmine ingest` first", path.display())));
        }
        corpus::load_documents(&path)
            .with_context(|| format!("cannot read {}", path.display()))
            .map_err(Failure::User)
    }

    /// Viewpoints declared in the config, or else every viewpoint of the
    /// ingested corpus.
    fn known_viewpoints(&self) -> Result<Vec<Viewpoint>, Failure> {
        if !self.config.viewpoints.is_empty() {
            return Ok(self.config.viewpoints.clone());
        }
        if !self.layout.documents().exists() {
            return Ok(Vec::new());
        }
        let ids: BTreeSet<String> = self.documents()?.into_iter().map(|d| d.viewpoint).collect();
        Ok(ids.into_iter().map(Viewpoint::new).collect())
    }

    /// The stored narratives, with the config's viewpoints and relation
    /// vocabulary applied.
    fn store(&self) -> Result<NarrativeStore, Failure> {
        let path = self.layout.store();
        let mut store = match fs::read_to_string(&path) {
            Ok(text) => NarrativeStore::from_json(&text).with_context(|| format!("invalid store {}", path.display()))?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => NarrativeStore::default(),
            Err(e) => return Err(Failure::User(anyhow!("cannot read {}: {e}", path.display()))),
        };
        let relations = &self.config.relations;
        for p in &relations.predicates {
            if store.relations().predicate(&p.label) != Some(p) {
                store
                    .relations_mut()
                    .upsert(RelationEntry::Narrative(p.clone()))
                    .map_err(|e| anyhow!("relation {:?}: {e}", p.label))?;
            }
        }
        for label in &relations.factual {
            if !store.relations().is_factual(label) {
                store
                    .relations_mut()
                    .register_factual(label.clone())
                    .map_err(|e| anyhow!("relation {label:?}: {e}"))?;
            }
        }
        // parents first, so every parent link resolves
        let mut pending = self.known_viewpoints()?;
        while !pending.is_empty() {
            let before = pending.len();
            let mut rest = Vec::new();
            for v in pending {
                let ready = v.parent.as_ref().map_or(true, |p| store.viewpoint(p).is_ok() || p == &v.id);
                if ready {
                    store.upsert_viewpoint(v)?;
                } else {
                    rest.push(v);
                }
            }
            if rest.len() == before {
                return Err(Failure::User(anyhow!("viewpoint {:?} has an unknown parent", rest[0].id)));
            }
            pending = rest;
        }
        Ok(store)
    }

    fn save_store(&self, store: &NarrativeStore) -> Result<(), Failure> {
        write_atomic(&self.layout.store(), &store.to_canonical_json()).map_err(Failure::User)
    }

    fn write_report<T: serde::Serialize>(&self, name: &str, report: &T) -> Result<(), Failure> {
        let text = to_canonical_string(report).map_err(|e| anyhow!("cannot serialize report: {e}"))?;
        write_atomic(&self.layout.report(name), &text).map_err(Failure::User)
    }

    fn templates(&self) -> Result<TemplateSet, Failure> {
        let mut templates = TemplateSet::default();
        if let Some(path) = &self.config.llm.templates {
            let path = self.layout.resolve(path);
            templates
                .load_overrides(&path)
                .with_context(|| format!("prompt templates {}", path.display()))?;
        }
        Ok(templates)
    }

    fn llm(&self) -> Result<Box<dyn CompletionBackend>, Failure> {
        let c = &self.config.llm;
        match c.backend {
            LlmKind::Mock => {
                let script = c
                    .script
                    .as_ref()
                    .ok_or_else(|| Failure::User(anyhow!("[llm] backend = \"mock\" needs a script")))?;
                let path = self.layout.resolve(script);
                let mock = MockBackend::load(&path).map_err(|e| Failure::User(e.into()))?;
                Ok(Box::new(mock))
            }
            LlmKind::Http => {
                let (Some(endpoint), Some(model)) = (&c.endpoint, &c.model) else {
                    return Err(Failure::User(anyhow!("[llm] backend = \"http\" needs endpoint and model")));
                };
                let http = HttpChatBackend::new(endpoint, model, Duration::from_secs(c.timeout_secs), c.retries)
                    .with_api_key(std::env::var(API_KEY_ENV).ok());
                if c.cache {
                    let cache = ResponseCache::open(&self.layout.llm_cache()).map_err(llm_failure)?;
                    Ok(Box::new(CachedBackend::new(http, Arc::new(cache))))
                } else {
                    Ok(Box::new(http))
                }
            }
        }
    }

    fn embedder(&self) -> Result<Box<dyn EmbeddingBackend>, Failure> {
        let c = &self.config.embedding;
        match c.backend {
            EmbeddingKind::Table => {
                let table = c
                    .table
                    .as_ref()
                    .ok_or_else(|| Failure::User(anyhow!("[embedding] backend = \"table\" needs a table")))?;
                let table = FixtureTable::load(&self.layout.resolve(table)).map_err(|e| Failure::User(e.into()))?;
                Ok(Box::new(table))
            }
            EmbeddingKind::Http => {
                let endpoint = c
                    .endpoint
                    .as_ref()
                    .ok_or_else(|| Failure::User(anyhow!("[embedding] backend = \"http\" needs an endpoint")))?;
                let http = HttpEmbedder::new(endpoint.clone(), c.dimension, Duration::from_secs(c.timeout_secs), c.retries)
                    .with_api_key(std::env::var(API_KEY_ENV).ok());
                Ok(Box::new(http))
            }
        }
    }
}

fn llm_failure(e: LlmError) -> Failure {
    if e.is_backend_failure() {
        Failure::Backend(e.into())
    } else {
        Failure::User(e.into())
    }
}

fn reject_text(reason: &RejectReason) -> String {
    match reason {
        RejectReason::TooShort { chars } => format!("too short ({chars} characters)"),
        RejectReason::TooLong { chars } => format!("too long ({chars} characters)"),
        RejectReason::Unreadable { message } => format!("unreadable ({message})"),
        RejectReason::Excluded { pattern } => format!("excluded by {pattern:?}"),
        RejectReason::UnknownViewpoint { viewpoint } => format!("unknown viewpoint {viewpoint:?}"),
        RejectReason::Duplicate { id } => format!("duplicate of {id}"),
    }
}

pub fn ingest_cmd(project: &Project, manifest: &Path) -> Outcome {
    let path = project.layout.resolve(manifest);
    let manifest = CorpusManifest::load(&path).map_err(|e| Failure::User(e.into()))?;
    let declared: BTreeSet<String> = project.config.viewpoints.iter().map(|v| v.id.clone()).collect();
    let opts = IngestOptions {
        min_chars: project.config.corpus.min_chars,
        max_chars: project.config.corpus.max_chars,
        viewpoints: (!declared.is_empty()).then_some(&declared),
    };
    let report = ingest(&manifest, opts).map_err(|e| Failure::User(e.into()))?;
    let documents = project.layout.documents();
    if let Some(dir) = documents.parent() {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    corpus::save_documents(&documents, &report.documents)
        .with_context(|| format!("cannot write {}", documents.display()))?;
    project.write_report("ingest.json", &report)?;

    let counts: Vec<String> = report
        .counts_by_viewpoint()
        .iter()
        .map(|(v, n)| format!("{v} {n}"))
        .collect();
    let mut out = format!(
        "accepted {} documents ({}), rejected {}\n",
        report.documents.len(),
        counts.join(", "),
        report.rejections.len()
    );
    for r in &report.rejections {
        out.push_str(&format!("rejected {}: {}\n", r.path.display(), reject_text(&r.reason)));
    }
    Ok(out)
}

pub struct MineArgs<'a> {
    pub event: &'a str,
    pub viewpoint: &'a str,
    pub depth: Option<usize>,
    pub timespan: Option<&'a str>,
}

pub fn mine_cmd(project: &Project, args: MineArgs<'_>, verbose: bool) -> Outcome {
    let c = &project.config.mining;
    let span_text = args
        .timespan
        .or(c.timespan.as_deref())
        .ok_or_else(|| Failure::User(anyhow!("no timespan: pass --timespan or set [mining] timespan")))?;
    let timespan =
        TimeSpec::parse(span_text).ok_or_else(|| Failure::User(anyhow!("cannot parse timespan {span_text:?}")))?;
    let mut config = MineConfig::new(args.event, timespan, args.viewpoint);
    config.max_recursion_depth = args.depth.unwrap_or(c.max_recursion_depth);
    config.hdbscan = c.hdbscan;
    config.merge_threshold = c.merge_threshold;
    config.concurrency = c.concurrency;
    config.noise = c.noise;
    config.relation_candidates = c.relation_candidates.clone();

    let mut store = project.store()?;
    let documents = project.documents()?;
    let (llm, embed, templates) = (project.llm()?, project.embedder()?, project.templates()?);
    let backends = Backends {
        llm: llm.as_ref(),
        embed: embed.as_ref(),
        templates: &templates,
    };
    let mut out = mine(&config, &mut store, &documents, backends)?;
    project.save_store(&store)?;
    if verbose {
        for (stage, ms) in &out.report.timings_ms {
            eprintln!("{stage}: {ms} ms");
        }
    }
    // timings would make the report differ between identical runs
    out.report.timings_ms.clear();
    project.write_report(&format!("mine-{}.json", out.narrative), &out.report)?;
    Ok(format!("{}\n", out.narrative))
}

pub fn bind_cmd(project: &Project, narrative: &str, source: Option<SourceKind>) -> Outcome {
    let c = &project.config.binding;
    let mut store = project.store()?;
    store.narrative(narrative)?;
    let embed = if c.embed_names { Some(project.embedder()?) } else { None };
    let embed = embed.as_deref();
    let out = match source.unwrap_or(c.source) {
        SourceKind::Snapshot => {
            let path = c
                .snapshot
                .as_ref()
                .ok_or_else(|| Failure::User(anyhow!("[binding] source = \"snapshot\" needs a snapshot file")))?;
            let snapshot = KgSnapshot::load(&project.layout.resolve(path))?;
            let kg = SnapshotSource::new(&snapshot, embed, c.scoring);
            bind_narrative(&mut store, narrative, &kg, &c.thresholds)?
        }
        SourceKind::Live => {
            let timeout = Duration::from_secs(c.timeout_secs);
            let mut kg = LiveSource::new(&project.layout.kg_cache(), timeout, c.retries, embed, c.scoring)?;
            if let (Some(s), Some(e)) = (&c.search_endpoint, &c.entity_endpoint) {
                kg = kg.with_endpoints(s, e);
            }
            bind_narrative(&mut store, narrative, &kg, &c.thresholds)?
        }
    };
    project.save_store(&store)?;
    project.write_report(&format!("bind-{narrative}.json"), &out.report)?;

    let r = &out.report;
    Ok(format!(
        "{narrative}: {} events in {} narratives: {} direct, {} indirect, {} none; {} ambiguous, {} compound labels, {} scope flags\n",
        r.bindings.len(),
        r.visited.len(),
        r.count(BindingKind::Direct),
        r.count(BindingKind::Indirect),
        r.count(BindingKind::None),
        r.ambiguities.len(),
        r.compounds.len(),
        r.scope_flags.len()
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Dot,
}

pub fn compare_cmd(project: &Project, narratives: &[String], options: CompareOptions, format: Format) -> Outcome {
    let store = project.store()?;
    let embed = project.embedder()?;
    let ids: Vec<&str> = narratives.iter().map(String::as_str).collect();
    let report = compare(&store, &ids, embed.as_ref(), &options)?;
    let json = to_canonical_string(&report).map_err(|e| anyhow!("cannot serialize report: {e}"))?;
    let dot = comparison_dot(&store, &report)?;
    let name = ids::short_id("compare", &ids);
    write_atomic(&project.layout.report(&format!("{name}.json")), &json)?;
    write_atomic(&project.layout.report(&format!("{name}.dot")), &dot)?;
    Ok(match format {
        Format::Json => json + "\n",
        Format::Dot => dot,
    })
}

pub fn export_cmd(project: &Project, narrative: &str, format: Format, output: Option<&Path>) -> Outcome {
    let store = project.store()?;
    let text = match format {
        Format::Json => narrative_json(&store, narrative)? + "\n",
        Format::Dot => narrmine_core::export::narrative_dot(&store, narrative)?,
    };
    match output {
        Some(path) => {
            write_atomic(&project.layout.resolve(path), &text)?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

fn dir_stats(dir: &Path, ext: &str) -> (usize, u64) {
    let Ok(listing) = fs::read_dir(dir) else { return (0, 0) };
    listing
        .filter_map(Result::ok)
        .filter(|e| e.path().extension().and_then(|x| x.to_str()) == Some(ext))
        .fold((0, 0), |(n, b), e| (n + 1, b + e.metadata().map(|m| m.len()).unwrap_or(0)))
}

pub fn cache_stats(project: &Project) -> Outcome {
    let (ln, lb) = dir_stats(&project.layout.llm_cache(), "txt");
    let (kn, kb) = dir_stats(&project.layout.kg_cache(), "json");
    Ok(format!("llm: {ln} entries, {lb} bytes\nkg: {kn} entries, {kb} bytes\n"))
}

pub fn cache_clear(project: &Project) -> Outcome {
    let llm = if project.layout.llm_cache().exists() {
        ResponseCache::open(&project.layout.llm_cache()).map_err(llm_failure)?.clear().map_err(llm_failure)?
    } else {
        0
    };
    let kg_dir = project.layout.kg_cache();
    let mut kg = 0;
    if let Ok(listing) = fs::read_dir(&kg_dir) {
        for entry in listing.filter_map(Result::ok) {
            if entry.path().extension().and_then(|x| x.to_str()) == Some("json") {
                fs::remove_file(entry.path()).with_context(|| format!("cannot remove {}", entry.path().display()))?;
                kg += 1;
            }
        }
    }
    Ok(format!("cleared {llm} llm entries and {kg} kg entries\n"))
}
