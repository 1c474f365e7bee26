//! Files of a project directory and the lock that serializes commands.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;

pub const CONFIG_FILE: &str = "narrmine.toml";
const LOCK_FILE: &str = ".narrmine.lock";

/// Paths of a project rooted at one directory:
///
/// ```text
/// narrmine.toml          config
/// corpus/documents.json  ingested documents
/// cache/llm/             completion cache
/// cache/kg/              knowledge-graph responses
/// store.json             narrative store
/// reports/               per-command JSON reports
/// ```
#[derive(Debug, Clone)]
pub struct ProjectLayout {
    root: PathBuf,
}

impl ProjectLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    /// `path` relative to the root, unless it is absolute.
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_owned()
        } else {
            self.root.join(path)
        }
    }

    pub fn config(&self) -> PathBuf {
        self.root.join(CONFIG_FILE)
    }

    pub fn documents(&self) -> PathBuf {
        self.root.join("corpus").join("documents.json")
    }

    pub fn llm_cache(&self) -> PathBuf {
        self.root.join("cache").join("llm")
    }

    pub fn kg_cache(&self) -> PathBuf {
        self.root.join("cache").join("kg")
    }

    pub fn store(&self) -> PathBuf {
        self.root.join("store.json")
    }

    pub fn report(&self, name: &str) -> PathBuf {
        self.root.join("reports").join(name)
    }

    pub fn lock(&self) -> anyhow::Result<ProjectLock> {
        let path = self.root.join(LOCK_FILE);
        let mut file = fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
            .map_err(|e| match e.kind() {
                std::io::ErrorKind::AlreadyExists => anyhow::anyhow!(
                    "{} exists: another narrmine command is running here (remove the file if it is stale)",
                    path.display()
                ),
                _ => anyhow::anyhow!("cannot create {}: {e}", path.display()),
            })?;
        let _ = writeln!(file, "{}", std::process::id());
        Ok(ProjectLock { path })
    }
}

/// Held for the duration of a command; removes the lock file on drop.
#[derive(Debug)]
pub struct ProjectLock {
    path: PathBuf,
}

impl Drop for ProjectLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Writes through a temporary file in the same directory and renames it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    fs::write(&tmp, contents).with_context(|| format!("cannot write {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("cannot replace {}", path.display()))
}
