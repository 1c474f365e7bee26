//! Blocking JSON-over-HTTP with sequential retries.

use std::thread;
use std::time::Duration;

use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NetError {
    #[error("HTTP {status} from {url}: {body}")]
    Status { url: String, status: u16, body: String },
    #[error("request to {url} failed: {message}")]
    Transport { url: String, message: String },
    #[error("invalid JSON from {url}: {message}")]
    Decode { url: String, message: String },
}

impl NetError {
    fn retryable(&self) -> bool {
        match self {
            NetError::Status { status, .. } => *status == 429 || *status >= 500,
            NetError::Transport { .. } => true,
            NetError::Decode { .. } => false,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct HttpClient {
    agent: ureq::Agent,
    retries: u32,
    backoff: Duration,
}

impl HttpClient {
    pub(crate) fn new(timeout: Duration, retries: u32) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout(timeout)
            .user_agent(concat!("narrmine/", env!("CARGO_PKG_VERSION")))
            .build();
        Self {
            agent,
            retries,
            backoff: Duration::from_millis(200),
        }
    }

    fn with_retries(&self, url: &str, call: impl Fn() -> Result<ureq::Response, ureq::Error>) -> Result<Value, NetError> {
        let mut attempt = 0;
        loop {
            let result = match call() {
                Ok(resp) => resp.into_json::<Value>().map_err(|e| NetError::Decode {
                    url: url.to_owned(),
                    message: e.to_string(),
                }),
                Err(ureq::Error::Status(status, resp)) => Err(NetError::Status {
                    url: url.to_owned(),
                    status,
                    body: resp.into_string().unwrap_or_default().chars().take(200).collect(),
                }),
                Err(e) => Err(NetError::Transport {
                    url: url.to_owned(),
                    message: e.to_string(),
                }),
            };
            match result {
                Err(e) if e.retryable() && attempt < self.retries => {
                    attempt += 1;
                    tracing::warn!(%url, attempt, error = %e, "retrying request");
                    thread::sleep(self.backoff * attempt);
                }
                other => return other,
            }
        }
    }

    pub(crate) fn post_json(&self, url: &str, bearer: Option<&str>, body: &Value) -> Result<Value, NetError> {
        self.with_retries(url, || {
            let mut req = self.agent.post(url);
            if let Some(key) = bearer {
                req = req.set("Authorization", &format!("Bearer {key}"));
            }
            req.send_json(body.clone())
        })
    }

    pub(crate) fn get_json(&self, url: &str, query: &[(&str, &str)]) -> Result<Value, NetError> {
        self.with_retries(url, || {
            let mut req = self.agent.get(url);
            for (k, v) in query {
                req = req.query(k, v);
            }
            req.call()
        })
    }
}
