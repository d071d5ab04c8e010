//! Wire client for chat-completion and embedding endpoints.
//!
//! One `Gateway` fronts either a live HTTP transport or a scripted mock. It
//! owns the retry policy (5 attempts, exponential backoff with jitter,
//! retrying only 429/5xx/timeouts), per-model token-bucket rate limiting,
//! and embedding batch splitting. Callers never see raw HTTP.

pub mod mock;
pub mod transport;
pub mod types;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rand::Rng;

use transport::{Endpoint, Transport, WireFailure, WireResponse};
use types::{ChatRequest, ChatResponse, TokenUsage, ToolCall};

pub use mock::MockTransport;
pub use transport::{HttpTransport, API_KEY_ENV, BASE_URL_ENV};
pub use types::{cost, ChatMessage, ModelPrice, PriceTable, Role, ToolSchema};

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("endpoint returned status {status}: {body}")]
    EndpointError { status: u16, body: String },
    #[error("request timed out (all retries exhausted)")]
    Timeout,
    #[error("no price entry for model: {0}")]
    UnknownModel(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("embedding dimension mismatch in one response: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("gateway configuration: {0}")]
    Config(String),
}

/// Tunable knobs; the defaults match the documented retry/backoff policy.
#[derive(Clone)]
pub struct GatewaySettings {
    pub max_attempts: u32,
    pub base_delay: Duration,
    /// Per-model request quota; `None` disables rate limiting.
    pub requests_per_minute: Option<f64>,
    pub embed_batch_size: usize,
}

impl Default for GatewaySettings {
    fn default() -> Self {
        GatewaySettings {
            max_attempts: 5,
            base_delay: Duration::from_secs(1),
            requests_per_minute: None,
            embed_batch_size: 64,
        }
    }
}

struct TokenBucket {
    tokens: f64,
    last: Instant,
}

type Sleeper = Box<dyn Fn(Duration) + Send + Sync>;

/// Client for chat and embedding calls over any [`Transport`].
pub struct Gateway {
    transport: Arc<dyn Transport>,
    settings: GatewaySettings,
    buckets: Mutex<HashMap<String, TokenBucket>>,
    sleeper: Sleeper,
}

impl Gateway {
    pub fn new(transport: Arc<dyn Transport>, settings: GatewaySettings) -> Self {
        Gateway {
            transport,
            settings,
            buckets: Mutex::new(HashMap::new()),
            sleeper: Box::new(std::thread::sleep),
        }
    }

    /// Replace the blocking sleep, so tests can record backoff and rate-limit
    /// waits instead of serving them.
    pub fn with_sleeper(mut self, sleeper: Sleeper) -> Self {
        self.sleeper = sleeper;
        self
    }

    /// Live gateway from `FSNAV_API_BASE_URL` / `FSNAV_API_KEY`.
    pub fn from_env(settings: GatewaySettings) -> Result<Self, GatewayError> {
        let transport =
            HttpTransport::from_env(Duration::from_secs(120)).map_err(GatewayError::Config)?;
        Ok(Self::new(Arc::new(transport), settings))
    }

    /// Mock gateway from a fixture file; the transport handle is returned so
    /// callers can inspect call counts and request logs.
    pub fn from_fixture_file(
        path: &std::path::Path,
        settings: GatewaySettings,
    ) -> Result<(Self, Arc<MockTransport>), GatewayError> {
        let mock = Arc::new(MockTransport::from_fixture_file(path).map_err(GatewayError::Config)?);
        Ok((Self::new(mock.clone(), settings), mock))
    }

    /// One chat completion, with validation, rate limiting, and retries.
    pub fn chat(&self, req: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        req.validate()?;
        let mut body = serde_json::json!({
            "model": req.model,
            "messages": req.messages.iter().map(|m| {
                serde_json::json!({
                    "role": match m.role {
                        types::Role::System => "system",
                        types::Role::User => "user",
                        types::Role::Assistant => "assistant",
                        types::Role::Tool => "tool",
                    },
                    "content": m.content,
                })
            }).collect::<Vec<_>>(),
        });
        if let Some(tools) = &req.tool_schemas {
            body["tools"] = tools
                .iter()
                .map(|t| {
                    serde_json::json!({
                        "type": "function",
                        "function": {
                            "name": t.name,
                            "description": t.description,
                            "parameters": t.parameters,
                        }
                    })
                })
                .collect();
        }
        if let Some(max) = req.max_output_tokens {
            body["max_tokens"] = serde_json::json!(max);
        }
        let resp = self.send_with_retry(Endpoint::Chat, &req.model, &body)?;
        parse_chat_response(&resp.body)
    }

    /// Embed texts in order, splitting into batches of the configured size.
    pub fn embed(&self, texts: &[String], model: &str) -> Result<Vec<Vec<f32>>, GatewayError> {
        if texts.is_empty() {
            return Err(GatewayError::InvalidRequest(
                "embed requires at least one text".into(),
            ));
        }
        let mut out: Vec<Vec<f32>> = Vec::with_capacity(texts.len());
        let mut dim: Option<usize> = None;
        for batch in texts.chunks(self.settings.embed_batch_size.max(1)) {
            let body = serde_json::json!({ "model": model, "input": batch });
            let resp = self.send_with_retry(Endpoint::Embed, model, &body)?;
            let vectors = parse_embed_response(&resp.body, batch.len())?;
            for v in vectors {
                match dim {
                    Some(d) if v.len() != d => {
                        return Err(GatewayError::DimensionMismatch {
                            expected: d,
                            found: v.len(),
                        })
                    }
                    None => dim = Some(v.len()),
                    _ => {}
                }
                out.push(v);
            }
        }
        Ok(out)
    }

    fn send_with_retry(
        &self,
        endpoint: Endpoint,
        model: &str,
        body: &serde_json::Value,
    ) -> Result<WireResponse, GatewayError> {
        self.acquire_slot(model);
        let mut last_err = GatewayError::Timeout;
        for attempt in 0..self.settings.max_attempts {
            if attempt > 0 {
                self.backoff(attempt - 1);
            }
            match self.transport.send(endpoint, body) {
                Ok(resp) if resp.status == 200 => return Ok(resp),
                Ok(resp) if resp.status == 429 || resp.status >= 500 => {
                    last_err = GatewayError::EndpointError {
                        status: resp.status,
                        body: resp.body.to_string(),
                    };
                }
                Ok(resp) => {
                    // 4xx other than 429 will not improve on retry.
                    return Err(GatewayError::EndpointError {
                        status: resp.status,
                        body: resp.body.to_string(),
                    });
                }
                Err(WireFailure::Timeout) => last_err = GatewayError::Timeout,
                Err(WireFailure::Other(msg)) => {
                    return Err(GatewayError::EndpointError {
                        status: 0,
                        body: msg,
                    })
                }
            }
        }
        Err(last_err)
    }

    /// Sleep `base·2^exponent`, jittered uniformly into the upper half of the
    /// interval so concurrent retries spread out.
    fn backoff(&self, exponent: u32) {
        let full = self.settings.base_delay.as_secs_f64() * f64::from(1u32 << exponent.min(16));
        let jittered = rand::thread_rng().gen_range(full / 2.0..=full);
        (self.sleeper)(Duration::from_secs_f64(jittered));
    }

    /// Token bucket per model: capacity = requests/minute, continuous refill.
    /// Callers that overdraw reserve a slot (balance goes negative) and sleep
    /// for their computed share, so waiters are serialized fairly.
    fn acquire_slot(&self, model: &str) {
        let Some(rpm) = self.settings.requests_per_minute else {
            return;
        };
        let rate = rpm / 60.0;
        let wait = {
            let mut buckets = self.buckets.lock().unwrap();
            let bucket = buckets.entry(model.to_string()).or_insert(TokenBucket {
                tokens: rpm,
                last: Instant::now(),
            });
            let now = Instant::now();
            let elapsed = now.duration_since(bucket.last).as_secs_f64();
            bucket.tokens = (bucket.tokens + elapsed * rate).min(rpm);
            bucket.last = now;
            if bucket.tokens >= 1.0 {
                bucket.tokens -= 1.0;
                None
            } else {
                let wait = (1.0 - bucket.tokens) / rate;
                bucket.tokens -= 1.0;
                Some(wait)
            }
        };
        if let Some(w) = wait {
            (self.sleeper)(Duration::from_secs_f64(w));
        }
    }
}

fn parse_chat_response(body: &serde_json::Value) -> Result<ChatResponse, GatewayError> {
    let message = body
        .pointer("/choices/0/message")
        .ok_or_else(|| GatewayError::EndpointError {
            status: 200,
            body: format!("response missing choices[0].message: {body}"),
        })?;
    let content = message.get("content").and_then(|c| c.as_str());
    let mut tool_calls = Vec::new();
    if let Some(calls) = message.get("tool_calls").and_then(|t| t.as_array()) {
        for call in calls {
            let name = call
                .pointer("/function/name")
                .and_then(|n| n.as_str())
                .unwrap_or_default()
                .to_string();
            let raw_args = call.pointer("/function/arguments").cloned().unwrap_or_default();
            // Arguments arrive as a JSON-encoded string on the wire.
            let arguments = match &raw_args {
                serde_json::Value::String(s) => {
                    serde_json::from_str(s).unwrap_or(serde_json::Value::String(s.clone()))
                }
                other => other.clone(),
            };
            tool_calls.push(ToolCall { name, arguments });
        }
    }
    if content.is_none() && tool_calls.is_empty() {
        return Err(GatewayError::EndpointError {
            status: 200,
            body: "response carried neither text nor tool calls".into(),
        });
    }
    let usage = TokenUsage {
        prompt_tokens: body
            .pointer("/usage/prompt_tokens")
            .and_then(|v| v.as_u64())
            .unwrap_or(0),
        completion_tokens: body
            .pointer("/usage/completion_tokens")
            .and_then(|v| v.as_u64())
            .unwrap_or(0),
    };
    Ok(ChatResponse {
        text: content.unwrap_or_default().to_string(),
        tool_calls,
        usage,
    })
}

fn parse_embed_response(
    body: &serde_json::Value,
    expected: usize,
) -> Result<Vec<Vec<f32>>, GatewayError> {
    let data = body
        .get("data")
        .and_then(|d| d.as_array())
        .ok_or_else(|| GatewayError::EndpointError {
            status: 200,
            body: format!("embedding response missing data array: {body}"),
        })?;
    if data.len() != expected {
        return Err(GatewayError::EndpointError {
            status: 200,
            body: format!("expected {expected} embeddings, got {}", data.len()),
        });
    }
    // Respect the index field if present; endpoints may reorder.
    let mut indexed: Vec<(usize, Vec<f32>)> = Vec::with_capacity(data.len());
    for (fallback_idx, item) in data.iter().enumerate() {
        let idx = item
            .get("index")
            .and_then(|i| i.as_u64())
            .map(|i| i as usize)
            .unwrap_or(fallback_idx);
        let vec = item
            .get("embedding")
            .and_then(|e| e.as_array())
            .ok_or_else(|| GatewayError::EndpointError {
                status: 200,
                body: "embedding item missing vector".into(),
            })?
            .iter()
            .map(|x| x.as_f64().unwrap_or(0.0) as f32)
            .collect();
        indexed.push((idx, vec));
    }
    indexed.sort_by_key(|(i, _)| *i);
    Ok(indexed.into_iter().map(|(_, v)| v).collect())
}

/// Adapter exposing the gateway's embed endpoint as a retriever backend.
pub struct GatewayEmbedder<'a> {
    gateway: &'a Gateway,
    model: String,
}

impl<'a> GatewayEmbedder<'a> {
    pub fn new(gateway: &'a Gateway, model: &str) -> Self {
        GatewayEmbedder {
            gateway,
            model: model.to_string(),
        }
    }
}

impl crate::retriever::dense::Embedder for GatewayEmbedder<'_> {
    fn tag(&self) -> &str {
        &self.model
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, crate::retriever::RetrieverError> {
        self.gateway
            .embed(texts, &self.model)
            .map_err(|e| crate::retriever::RetrieverError::Backend(e.to_string()))
    }
}
