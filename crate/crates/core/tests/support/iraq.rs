//! The three-viewpoint Iraq War fixture: corpus, scripted model, embeddings.

use std::collections::BTreeMap;
use std::path::PathBuf;

use narrmine_core::corpus::{ingest, CorpusManifest, Document, IngestOptions, IngestReport};
use narrmine_core::llm::{MockBackend, TemplateSet};
use narrmine_core::miner::{mine, Backends, MineConfig, MiningReport};
use narrmine_core::semantics::{FixtureTable, HdbscanParams};
use narrmine_core::{NarrativeStore, TimeSpec, Viewpoint};

pub const VIEWPOINTS: [&str; 3] = ["RU", "UK", "US"];

pub fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/iraq-war")
}

pub fn ingest_corpus() -> IngestReport {
    let manifest = CorpusManifest::load(&dir().join("corpus/manifest.jsonl")).unwrap();
    ingest(&manifest, IngestOptions::default()).unwrap()
}

pub fn config(viewpoint: &str) -> MineConfig {
    let mut c = MineConfig::new("Iraq War", TimeSpec::years(2000, 2012).unwrap(), viewpoint);
    c.hdbscan = HdbscanParams {
        min_cluster_size: 2,
        min_samples: 1,
        epsilon: 0.0,
    };
    c
}

pub fn empty_store() -> NarrativeStore {
    let mut store = NarrativeStore::default();
    for v in VIEWPOINTS {
        store.upsert_viewpoint(Viewpoint::new(v)).unwrap();
    }
    store
}

pub fn table() -> FixtureTable {
    FixtureTable::load(&dir().join("embeddings.json")).unwrap()
}

pub fn mock() -> MockBackend {
    MockBackend::load(&dir().join("mock_script.json")).unwrap()
}

pub struct Mined {
    pub store: NarrativeStore,
    /// Narrative id per viewpoint.
    pub roots: BTreeMap<String, String>,
    pub reports: BTreeMap<String, MiningReport>,
    pub documents: Vec<Document>,
}

/// Mines every viewpoint from a fresh store.
pub fn mine_all() -> Mined {
    let documents = ingest_corpus().documents;
    let (llm, embed, templates) = (mock(), table(), TemplateSet::default());
    let backends = Backends {
        llm: &llm,
        embed: &embed,
        templates: &templates,
    };
    let mut store = empty_store();
    let mut roots = BTreeMap::new();
    let mut reports = BTreeMap::new();
    for v in VIEWPOINTS {
        let out = mine(&config(v), &mut store, &documents, backends).unwrap();
        roots.insert(v.to_owned(), out.narrative);
        reports.insert(v.to_owned(), out.report);
    }
    Mined {
        store,
        roots,
        reports,
        documents,
    }
}
