use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use super::{CompletionBackend, CompletionRequest, LlmError};

/// One scripted answer. It applies to prompts rendered from `template` that
/// contain every string in `keys`; an entry without keys is a fallback.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockEntry {
    pub template: String,
    #[serde(default)]
    pub keys: Vec<String>,
    pub response: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockScript {
    #[serde(default = "default_model")]
    pub model: String,
    pub responses: Vec<MockEntry>,
}

fn default_model() -> String {
    "mock".to_owned()
}

/// Deterministic backend answering from a script. The matching entry with
/// the most keys wins; ties go to the earliest entry.
#[derive(Debug)]
pub struct MockBackend {
    script: MockScript,
    calls: AtomicUsize,
}

impl MockBackend {
    pub fn new(script: MockScript) -> Self {
        Self {
            script,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn from_entries(entries: Vec<MockEntry>) -> Self {
        Self::new(MockScript {
            model: default_model(),
            responses: entries,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, LlmError> {
        serde_json::from_str(text)
            .map(Self::new)
            .map_err(|e| LlmError::BackendUnavailable(format!("invalid mock script: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LlmError::BackendUnavailable(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Number of completions answered so far.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn script(&self) -> &MockScript {
        &self.script
    }

    fn lookup(&self, request: &CompletionRequest) -> Option<&MockEntry> {
        let mut best: Option<&MockEntry> = None;
        for entry in &self.script.responses {
            if entry.template != request.template
                || !entry.keys.iter().all(|k| request.prompt.contains(k.as_str()))
            {
                continue;
            }
            if best.map_or(true, |b| entry.keys.len() > b.keys.len()) {
                best = Some(entry);
            }
        }
        best
    }
}

impl CompletionBackend for MockBackend {
    fn model_name(&self) -> &str {
        &self.script.model
    }

    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.lookup(request)
            .map(|e| e.response.clone())
            .ok_or_else(|| LlmError::NoScriptedResponse {
                template: request.template.clone(),
                excerpt: request.prompt.chars().take(80).collect(),
            })
    }
}
