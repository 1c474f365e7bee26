//! Completion backends, prompt templates, response caching and the prompted
//! sub-tasks used by the miner.

mod cache;
mod http;
mod mock;
pub mod parse;
mod tasks;
pub mod template;

pub use cache::{CacheStats, CachedBackend, ResponseCache};
pub use http::HttpChatBackend;
pub use mock::{MockBackend, MockEntry, MockScript};
pub use tasks::{LabeledEvent, LabeledEventRef, LlmTasks};
pub use template::{FewShot, PromptTemplate, TemplateError, TemplateSet};

use crate::net::NetError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompletionRequest {
    /// Name of the template the prompt was rendered from.
    pub template: String,
    pub prompt: String,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum LlmError {
    #[error("completion backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("no scripted response for template {template:?} (prompt starts {excerpt:?})")]
    NoScriptedResponse { template: String, excerpt: String },
    #[error("answer could not be parsed: {0:?}")]
    UnparseableAnswer(String),
    #[error("the model returned no timeline")]
    EmptyTimeline,
    #[error("document body is empty")]
    EmptyDocument,
    #[error("no input to label")]
    EmptyInput,
    #[error("invalid timespan: {0}")]
    InvalidTimespan(String),
    #[error("model answered with unregistered relation {0:?}")]
    UnknownPredicate(String),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("response cache: {0}")]
    Cache(String),
}

impl From<NetError> for LlmError {
    fn from(e: NetError) -> Self {
        LlmError::BackendUnavailable(e.to_string())
    }
}

impl LlmError {
    /// Errors that mean the backend itself failed, as opposed to a bad answer.
    pub fn is_backend_failure(&self) -> bool {
        matches!(
            self,
            LlmError::BackendUnavailable(_) | LlmError::NoScriptedResponse { .. } | LlmError::Cache(_)
        )
    }
}

pub trait CompletionBackend: Send + Sync {
    fn model_name(&self) -> &str;
    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError>;
}

impl<B: CompletionBackend + ?Sized> CompletionBackend for &B {
    fn model_name(&self) -> &str {
        (**self).model_name()
    }
    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        (**self).complete(request)
    }
}

impl<B: CompletionBackend + ?Sized> CompletionBackend for std::sync::Arc<B> {
    fn model_name(&self) -> &str {
        (**self).model_name()
    }
    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        (**self).complete(request)
    }
}

impl<B: CompletionBackend + ?Sized> CompletionBackend for Box<B> {
    fn model_name(&self) -> &str {
        (**self).model_name()
    }
    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        (**self).complete(request)
    }
}
