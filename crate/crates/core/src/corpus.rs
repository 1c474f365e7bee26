//! Document ingestion and per-viewpoint selection.
//!
//! A manifest is a JSON-lines file. Each line is either a document entry
//! `{"path", "viewpoint", "outlet", "url", "title"?}` or an exclusion record
//! `{"exclude": "<substring>"}` that drops every entry whose URL contains the
//! substring (case-insensitive).

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ids;

pub const DEFAULT_MIN_CHARS: usize = 1000;
pub const DEFAULT_MAX_CHARS: usize = 8000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub viewpoint: String,
    pub outlet: String,
    pub url: String,
    pub title: String,
    pub body: String,
    pub char_count: usize,
}

impl Document {
    pub fn new(
        viewpoint: impl Into<String>,
        outlet: impl Into<String>,
        url: impl Into<String>,
        title: impl Into<String>,
        body: impl Into<String>,
    ) -> Self {
        let url = url.into();
        let body = body.into().trim().to_owned();
        Self {
            id: ids::short_id("doc", &[&url, &body]),
            viewpoint: viewpoint.into(),
            outlet: outlet.into(),
            char_count: body.chars().count(),
            url,
            title: title.into().trim().to_owned(),
            body,
        }
    }

    /// Title and body as shown to the language model.
    pub fn text(&self) -> String {
        if self.title.is_empty() {
            self.body.clone()
        } else {
            format!("{}\n\n{}", self.title, self.body)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub viewpoint: String,
    pub outlet: String,
    pub url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum ManifestLine {
    Exclude { exclude: String },
    Entry(ManifestEntry),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusManifest {
    pub entries: Vec<ManifestEntry>,
    pub exclusions: Vec<String>,
    /// Relative entry paths resolve against this directory.
    pub base_dir: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read manifest {path}: {source}")]
    ManifestUnreadable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest line {line}: {message}")]
    ManifestSyntax { line: usize, message: String },
    #[error("character bounds must satisfy min < max (got {min}..{max})")]
    InvalidBounds { min: usize, max: usize },
    #[error("unknown viewpoint {0:?}")]
    UnknownViewpoint(String),
}

impl CorpusManifest {
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self, CorpusError> {
        let mut manifest = CorpusManifest {
            base_dir: base_dir.into(),
            ..Default::default()
        };
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parsed: ManifestLine =
                serde_json::from_str(line).map_err(|e| CorpusError::ManifestSyntax {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            match parsed {
                ManifestLine::Exclude { exclude } => manifest.exclusions.push(exclude),
                ManifestLine::Entry(e) => manifest.entries.push(e),
            }
        }
        Ok(manifest)
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let text = fs::read_to_string(path).map_err(|source| CorpusError::ManifestUnreadable {
            path: path.to_owned(),
            source,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.exclusions {
            out.push_str(&serde_json::json!({ "exclude": e }).to_string());
            out.push('\n');
        }
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("entries serialize"));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum RejectReason {
    TooShort { chars: usize },
    TooLong { chars: usize },
    Unreadable { message: String },
    Excluded { pattern: String },
    UnknownViewpoint { viewpoint: String },
    Duplicate { id: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub path: PathBuf,
    pub url: String,
    #[serde(flatten)]
    pub reason: RejectReason,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IngestOptions<'a> {
    pub min_chars: usize,
    pub max_chars: usize,
    /// When set, entries with other viewpoints are rejected.
    pub viewpoints: Option<&'a BTreeSet<String>>,
}

impl Default for IngestOptions<'_> {
    fn default() -> Self {
        Self {
            min_chars: DEFAULT_MIN_CHARS,
            max_chars: DEFAULT_MAX_CHARS,
            viewpoints: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub documents: Vec<Document>,
    pub rejections: Vec<Rejection>,
}

impl IngestReport {
    pub fn counts_by_viewpoint(&self) -> BTreeMap<&str, usize> {
        let mut out = BTreeMap::new();
        for d in &self.documents {
            *out.entry(d.viewpoint.as_str()).or_default() += 1;
        }
        out
    }
}

/// Splits raw file content into title and body. A given title leaves the
/// whole content as body; otherwise the first line is the title.
fn split_title(raw: &str, title: Option<&str>) -> (String, String) {
    match title {
        Some(t) => (t.to_owned(), raw.to_owned()),
        None => {
            let raw = raw.trim_start();
            match raw.split_once('\n') {
                Some((first, rest)) => (first.trim().to_owned(), rest.to_owned()),
                None => (String::new(), raw.to_owned()),
            }
        }
    }
}

fn read_entry(base: &Path, entry: &ManifestEntry) -> Result<Document, RejectReason> {
    let path = if entry.path.is_absolute() {
        entry.path.clone()
    } else {
        base.join(&entry.path)
    };
    let raw = fs::read_to_string(&path).map_err(|e| RejectReason::Unreadable {
        message: e.to_string(),
    })?;
    let (title, body) = split_title(&raw, entry.title.as_deref());
    Ok(Document::new(&entry.viewpoint, &entry.outlet, &entry.url, title, body))
}

/// Reads, filters and deduplicates every manifest entry. Output documents
/// are sorted by id; rejections follow manifest order.
pub fn ingest(manifest: &CorpusManifest, opts: IngestOptions<'_>) -> Result<IngestReport, CorpusError> {
    if opts.min_chars >= opts.max_chars {
        return Err(CorpusError::InvalidBounds {
            min: opts.min_chars,
            max: opts.max_chars,
        });
    }
    let exclusions: Vec<String> = manifest.exclusions.iter().map(|e| e.to_lowercase()).collect();

    let results: Vec<Result<Document, RejectReason>> = manifest
        .entries
        .par_iter()
        .map(|entry| {
            let url = entry.url.to_lowercase();
            if let Some(p) = exclusions.iter().find(|p| url.contains(p.as_str())) {
                return Err(RejectReason::Excluded { pattern: p.clone() });
            }
            if let Some(known) = opts.viewpoints {
                if !known.contains(&entry.viewpoint) {
                    return Err(RejectReason::UnknownViewpoint {
                        viewpoint: entry.viewpoint.clone(),
                    });
                }
            }
            let doc = read_entry(&manifest.base_dir, entry)?;
            if doc.char_count < opts.min_chars {
                Err(RejectReason::TooShort { chars: doc.char_count })
            } else if doc.char_count > opts.max_chars {
                Err(RejectReason::TooLong { chars: doc.char_count })
            } else {
                Ok(doc)
            }
        })
        .collect();

    let mut report = IngestReport::default();
    let mut seen = BTreeSet::new();
    for (entry, result) in manifest.entries.iter().zip(results) {
        let reject = |reason| Rejection {
            path: entry.path.clone(),
            url: entry.url.clone(),
            reason,
        };
        match result {
            Ok(doc) if !seen.insert(doc.id.clone()) => {
                report.rejections.push(reject(RejectReason::Duplicate { id: doc.id }))
            }
            Ok(doc) => report.documents.push(doc),
            Err(reason) => report.rejections.push(reject(reason)),
        }
    }
    report.documents.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(report)
}

/// Documents annotated with `viewpoint`. `known` lists the valid viewpoint ids.
pub fn select_viewpoint<'a>(
    documents: &'a [Document],
    viewpoint: &str,
    known: &BTreeSet<String>,
) -> Result<Vec<&'a Document>, CorpusError> {
    if !known.contains(viewpoint) {
        return Err(CorpusError::UnknownViewpoint(viewpoint.to_owned()));
    }
    Ok(documents.iter().filter(|d| d.viewpoint == viewpoint).collect())
}

/// Stored corpus: accepted documents as one JSON file.
pub fn save_documents(path: &Path, documents: &[Document]) -> std::io::Result<()> {
    let text = crate::model::to_canonical_string(documents).map_err(std::io::Error::other)?;
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text)?;
    fs::rename(tmp, path)
}

pub fn load_documents(path: &Path) -> std::io::Result<Vec<Document>> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(std::io::Error::other)
}
