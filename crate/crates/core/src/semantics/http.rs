//! Embedding service reached over HTTP: `POST {"texts": [...]}` answered by
//! `{"vectors": [[...], ...]}`.

use std::time::Duration;

use serde_json::json;

use super::{EmbeddingBackend, SemanticsError};
use crate::net::HttpClient;

#[derive(Debug, Clone)]
pub struct HttpEmbedder {
    endpoint: String,
    dimension: usize,
    api_key: Option<String>,
    client: HttpClient,
}

impl HttpEmbedder {
    pub fn new(endpoint: impl Into<String>, dimension: usize, timeout: Duration, retries: u32) -> Self {
        Self {
            endpoint: endpoint.into(),
            dimension,
            api_key: None,
            client: HttpClient::new(timeout, retries),
        }
    }

    pub fn with_api_key(mut self, key: Option<String>) -> Self {
        self.api_key = key;
        self
    }
}

impl EmbeddingBackend for HttpEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, SemanticsError> {
        let resp = self
            .client
            .post_json(&self.endpoint, self.api_key.as_deref(), &json!({ "texts": texts }))
            .map_err(|e| SemanticsError::BackendUnavailable(e.to_string()))?;
        let vectors: Vec<Vec<f64>> = serde_json::from_value(resp["vectors"].clone())
            .map_err(|e| SemanticsError::BackendUnavailable(format!("malformed response: {e}")))?;
        if vectors.len() != texts.len() {
            return Err(SemanticsError::BackendUnavailable(format!(
                "expected {} vectors, got {}",
                texts.len(),
                vectors.len()
            )));
        }
        Ok(vectors)
    }
}
