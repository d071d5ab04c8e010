//! Transport abstraction: live HTTP or scripted mock.

use std::time::Duration;

/// Which wire endpoint a request targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Chat,
    Embed,
}

/// Raw HTTP-level response before protocol parsing.
#[derive(Debug, Clone)]
pub struct WireResponse {
    pub status: u16,
    pub body: serde_json::Value,
}

/// Failures below the HTTP layer.
#[derive(Debug)]
pub enum WireFailure {
    /// Connect/read deadline exceeded. Retryable.
    Timeout,
    /// Anything else (DNS, refused connection, malformed body). Not retried.
    Other(String),
}

pub trait Transport: Send + Sync {
    fn send(&self, endpoint: Endpoint, body: &serde_json::Value) -> Result<WireResponse, WireFailure>;
}

/// Environment variable naming the live endpoint base URL.
pub const BASE_URL_ENV: &str = "FSNAV_API_BASE_URL";
/// Environment variable holding the live endpoint API key.
pub const API_KEY_ENV: &str = "FSNAV_API_KEY";

/// Live JSON-over-HTTP transport speaking the chat-completions shape.
pub struct HttpTransport {
    base_url: String,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(base_url: &str, api_key: Option<&str>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpTransport {
            base_url: base_url.trim_end_matches('/').to_string(),
            api_key: api_key.map(str::to_string),
            agent,
        }
    }

    /// Construct from `FSNAV_API_BASE_URL` / `FSNAV_API_KEY`.
    pub fn from_env(timeout: Duration) -> Result<Self, String> {
        let base = std::env::var(BASE_URL_ENV)
            .map_err(|_| format!("{BASE_URL_ENV} is not set; cannot reach a live endpoint"))?;
        let key = std::env::var(API_KEY_ENV).ok();
        Ok(Self::new(&base, key.as_deref(), timeout))
    }

    fn url_for(&self, endpoint: Endpoint) -> String {
        match endpoint {
            Endpoint::Chat => format!("{}/chat/completions", self.base_url),
            Endpoint::Embed => format!("{}/embeddings", self.base_url),
        }
    }
}

impl Transport for HttpTransport {
    fn send(&self, endpoint: Endpoint, body: &serde_json::Value) -> Result<WireResponse, WireFailure> {
        let mut req = self.agent.post(&self.url_for(endpoint));
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let result = req.send_json(body);
        match result {
            Ok(mut resp) => {
                let status = resp.status().as_u16();
                let text = resp
                    .body_mut()
                    .read_to_string()
                    .map_err(|e| WireFailure::Other(format!("reading response body: {e}")))?;
                let body = serde_json::from_str(&text)
                    .unwrap_or(serde_json::Value::String(text));
                Ok(WireResponse { status, body })
            }
            Err(ureq::Error::Timeout(_)) => Err(WireFailure::Timeout),
            Err(e) => {
                let msg = e.to_string();
                // ureq wraps socket timeouts in Io errors; classify those as
                // timeouts so the retry policy treats them as transient.
                if msg.contains("timed out") || msg.contains("timeout") {
                    Err(WireFailure::Timeout)
                } else {
                    Err(WireFailure::Other(msg))
                }
            }
        }
    }
}
