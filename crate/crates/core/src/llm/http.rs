use std::time::Duration;

use serde_json::{json, Value};

use super::{CompletionBackend, CompletionRequest, LlmError};
use crate::net::HttpClient;

/// Chat-completions style endpoint: posts one user message at temperature 0
/// and reads `choices[0].message.content`.
#[derive(Debug, Clone)]
pub struct HttpChatBackend {
    endpoint: String,
    model: String,
    api_key: Option<String>,
    client: HttpClient,
}

impl HttpChatBackend {
    pub fn new(endpoint: &str, model: &str, timeout: Duration, retries: u32) -> Self {
        Self {
            endpoint: endpoint.to_owned(),
            model: model.to_owned(),
            api_key: None,
            client: HttpClient::new(timeout, retries),
        }
    }

    pub fn with_api_key(mut self, key: Option<String>) -> Self {
        self.api_key = key.filter(|k| !k.is_empty());
        self
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }
}

fn content(reply: &Value) -> Option<&str> {
    reply.get("choices")?.get(0)?.get("message")?.get("content")?.as_str()
}

impl CompletionBackend for HttpChatBackend {
    fn model_name(&self) -> &str {
        &self.model
    }

    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        let body = json!({
            "model": self.model,
            "temperature": 0,
            "messages": [{"role": "user", "content": request.prompt}],
        });
        let reply = self.client.post_json(&self.endpoint, self.api_key.as_deref(), &body)?;
        content(&reply)
            .map(str::to_owned)
            .ok_or_else(|| LlmError::BackendUnavailable(format!("{}: reply has no message content", self.endpoint)))
    }
}
