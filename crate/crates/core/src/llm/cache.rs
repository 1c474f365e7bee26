use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::RwLock;

use serde::Serialize;

use super::{CompletionBackend, CompletionRequest, LlmError};
use crate::ids;

/// Raw responses keyed by a hash of (template, prompt, model), held in memory
/// and optionally mirrored to one file per entry in a directory.
#[derive(Debug, Default)]
pub struct ResponseCache {
    entries: RwLock<HashMap<String, String>>,
    dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CacheStats {
    pub entries: usize,
    pub bytes: usize,
}

impl ResponseCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens a directory-backed cache, loading any entries already there.
    pub fn open(dir: &Path) -> Result<Self, LlmError> {
        fs::create_dir_all(dir).map_err(|e| LlmError::Cache(format!("{}: {e}", dir.display())))?;
        let mut entries = HashMap::new();
        let listing = fs::read_dir(dir).map_err(|e| LlmError::Cache(format!("{}: {e}", dir.display())))?;
        for item in listing {
            let path = item.map_err(|e| LlmError::Cache(e.to_string()))?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("txt") {
                continue;
            }
            let Some(key) = path.file_stem().and_then(|s| s.to_str()) else { continue };
            let text = fs::read_to_string(&path).map_err(|e| LlmError::Cache(format!("{}: {e}", path.display())))?;
            entries.insert(key.to_owned(), text);
        }
        Ok(Self {
            entries: RwLock::new(entries),
            dir: Some(dir.to_owned()),
        })
    }

    pub fn key(template: &str, prompt: &str, model: &str) -> String {
        ids::digest(&[template, prompt, model])
    }

    pub fn get(&self, key: &str) -> Option<String> {
        self.entries.read().expect("cache lock").get(key).cloned()
    }

    pub fn put(&self, key: &str, response: &str) -> Result<(), LlmError> {
        if let Some(dir) = &self.dir {
            let path = dir.join(format!("{key}.txt"));
            let tmp = dir.join(format!(".{key}.{}.tmp", std::process::id()));
            fs::write(&tmp, response)
                .and_then(|_| fs::rename(&tmp, &path))
                .map_err(|e| LlmError::Cache(format!("{}: {e}", path.display())))?;
        }
        self.entries
            .write()
            .expect("cache lock")
            .insert(key.to_owned(), response.to_owned());
        Ok(())
    }

    pub fn stats(&self) -> CacheStats {
        let entries = self.entries.read().expect("cache lock");
        CacheStats {
            entries: entries.len(),
            bytes: entries.values().map(String::len).sum(),
        }
    }

    /// Drops every entry, including the files on disk.
    pub fn clear(&self) -> Result<usize, LlmError> {
        let mut entries = self.entries.write().expect("cache lock");
        let n = entries.len();
        if let Some(dir) = &self.dir {
            for key in entries.keys() {
                let path = dir.join(format!("{key}.txt"));
                match fs::remove_file(&path) {
                    Ok(()) => {}
                    Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
                    Err(e) => return Err(LlmError::Cache(format!("{}: {e}", path.display()))),
                }
            }
        }
        entries.clear();
        Ok(n)
    }
}

/// Answers from the cache when possible and records every fresh response.
pub struct CachedBackend<B> {
    inner: B,
    cache: std::sync::Arc<ResponseCache>,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl<B: CompletionBackend> CachedBackend<B> {
    pub fn new(inner: B, cache: std::sync::Arc<ResponseCache>) -> Self {
        Self {
            inner,
            cache,
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
        }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }
}

impl<B: CompletionBackend> CompletionBackend for CachedBackend<B> {
    fn model_name(&self) -> &str {
        self.inner.model_name()
    }

    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        let key = ResponseCache::key(&request.template, &request.prompt, self.inner.model_name());
        if let Some(hit) = self.cache.get(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(hit);
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let response = self.inner.complete(request)?;
        self.cache.put(&key, &response)?;
        Ok(response)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    struct Counting(AtomicUsize);

    impl CompletionBackend for Counting {
        fn model_name(&self) -> &str {
            "counting"
        }
        fn complete(&self, r: &CompletionRequest) -> Result<String, LlmError> {
            let n = self.0.fetch_add(1, Ordering::SeqCst);
            Ok(format!("{}#{n}", r.prompt))
        }
    }

    fn req(p: &str) -> CompletionRequest {
        CompletionRequest {
            template: "t".into(),
            prompt: p.into(),
        }
    }

    #[test]
    fn one_char_prompts_do_not_collide() {
        assert_ne!(ResponseCache::key("t", "abc", "m"), ResponseCache::key("t", "abd", "m"));
        assert_ne!(ResponseCache::key("t", "a", "bc"), ResponseCache::key("t", "ab", "c"));
        assert_ne!(ResponseCache::key("t1", "x", "m"), ResponseCache::key("t", "1x", "m"));
    }

    #[test]
    fn hit_bypasses_backend() {
        let cache = Arc::new(ResponseCache::in_memory());
        let b = CachedBackend::new(Counting(AtomicUsize::new(0)), cache.clone());
        let first = b.complete(&req("p")).unwrap();
        let second = b.complete(&req("p")).unwrap();
        assert_eq!(first, second);
        assert_eq!(b.inner().0.load(Ordering::SeqCst), 1);
        assert_eq!((b.hits(), b.misses()), (1, 1));
        b.complete(&req("q")).unwrap();
        assert_eq!(cache.stats().entries, 2);
    }

    #[test]
    fn directory_cache_persists_and_clears() {
        let dir = tempfile::tempdir().unwrap();
        {
            let cache = Arc::new(ResponseCache::open(dir.path()).unwrap());
            let b = CachedBackend::new(Counting(AtomicUsize::new(0)), cache);
            b.complete(&req("p")).unwrap();
        }
        let cache = Arc::new(ResponseCache::open(dir.path()).unwrap());
        assert_eq!(cache.stats().entries, 1);
        let b = CachedBackend::new(Counting(AtomicUsize::new(0)), cache.clone());
        assert_eq!(b.complete(&req("p")).unwrap(), "p#0");
        assert_eq!(b.inner().0.load(Ordering::SeqCst), 0);
        assert_eq!(cache.clear().unwrap(), 1);
        assert_eq!(ResponseCache::open(dir.path()).unwrap().stats().entries, 0);
    }
}
