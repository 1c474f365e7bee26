//! `narrmine.toml`: backends, mining parameters, binding thresholds and the
//! viewpoints known to the project. Every section is optional.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use narrmine_core::binder::{BindThresholds, ScoreParams};
use narrmine_core::compare::CompareOptions;
use narrmine_core::miner::NoisePolicy;
use narrmine_core::semantics::HdbscanParams;
use narrmine_core::{RelationPredicate, Viewpoint, HAPPENED_AFTER};
use serde::Deserialize;

pub const API_KEY_ENV: &str = "NARRMINE_API_KEY";

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub corpus: CorpusConfig,
    pub llm: LlmConfig,
    pub embedding: EmbeddingConfig,
    pub mining: MiningConfig,
    pub binding: BindingConfig,
    pub compare: CompareOptions,
    #[serde(rename = "viewpoint")]
    pub viewpoints: Vec<Viewpoint>,
    pub relations: RelationsConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub min_chars: usize,
    pub max_chars: usize,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            min_chars: narrmine_core::corpus::DEFAULT_MIN_CHARS,
            max_chars: narrmine_core::corpus::DEFAULT_MAX_CHARS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LlmKind {
    Mock,
    Http,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmConfig {
    pub backend: LlmKind,
    /// Mock script, for `backend = "mock"`.
    pub script: Option<PathBuf>,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub timeout_secs: u64,
    pub retries: u32,
    /// JSON file overriding prompt templates.
    pub templates: Option<PathBuf>,
    /// Cache HTTP completions under cache/llm.
    pub cache: bool,
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            backend: LlmKind::Mock,
            script: None,
            endpoint: None,
            model: None,
            timeout_secs: 120,
            retries: 2,
            templates: None,
            cache: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingKind {
    Table,
    Http,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub backend: EmbeddingKind,
    pub table: Option<PathBuf>,
    pub endpoint: Option<String>,
    pub dimension: usize,
    pub timeout_secs: u64,
    pub retries: u32,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            backend: EmbeddingKind::Table,
            table: None,
            endpoint: None,
            dimension: 384,
            timeout_secs: 60,
            retries: 2,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MiningConfig {
    /// Default timespan for `mine`, e.g. "2000 to 2012".
    pub timespan: Option<String>,
    pub max_recursion_depth: usize,
    pub merge_threshold: f64,
    pub concurrency: usize,
    pub noise: NoisePolicy,
    pub relation_candidates: Vec<String>,
    pub hdbscan: HdbscanParams,
}

impl Default for MiningConfig {
    fn default() -> Self {
        Self {
            timespan: None,
            max_recursion_depth: 1,
            merge_threshold: 0.8,
            concurrency: 4,
            noise: NoisePolicy::Singleton,
            relation_candidates: vec![HAPPENED_AFTER.to_owned()],
            hdbscan: HdbscanParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Snapshot,
    Live,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BindingConfig {
    pub source: SourceKind,
    pub snapshot: Option<PathBuf>,
    pub thresholds: BindThresholds,
    pub scoring: ScoreParams,
    /// Use the embedding backend for name similarity.
    pub embed_names: bool,
    pub search_endpoint: Option<String>,
    pub entity_endpoint: Option<String>,
    pub timeout_secs: u64,
    pub retries: u32,
}

impl Default for BindingConfig {
    fn default() -> Self {
        Self {
            source: SourceKind::Snapshot,
            snapshot: None,
            thresholds: BindThresholds::default(),
            scoring: ScoreParams::default(),
            embed_names: true,
            search_endpoint: None,
            entity_endpoint: None,
            timeout_secs: 30,
            retries: 2,
        }
    }
}

/// Vocabulary added to the default relation registry.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RelationsConfig {
    #[serde(rename = "predicate")]
    pub predicates: Vec<RelationPredicate>,
    pub factual: Vec<String>,
}

impl Config {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let config: Config = toml::from_str(text)?;
        let mut seen = std::collections::BTreeSet::new();
        for v in &config.viewpoints {
            if !seen.insert(v.id.as_str()) {
                bail!("viewpoint {:?} is declared twice", v.id);
            }
        }
        Ok(config)
    }

    /// Reads the config file; a missing file gives the defaults.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        match std::fs::read_to_string(path) {
            Ok(text) => Self::parse(&text).with_context(|| format!("invalid config {}", path.display())),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::default()),
            Err(e) => Err(e).with_context(|| format!("cannot read {}", path.display())),
        }
    }
}
