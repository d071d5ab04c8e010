//! Scripted mock transport for offline runs and tests.
//!
//! A fixture file declares an ordered list of rules; each incoming request is
//! answered by the first rule that matches and is not exhausted. Rules can
//! script failures (`status: 500`), canned chat replies, tool calls, and
//! embedding dimensions. Embedding vectors are derived deterministically from
//! the input text, so offline runs are reproducible byte for byte.

use std::path::Path;
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use super::transport::{Endpoint, Transport, WireFailure, WireResponse};

/// Matcher half of a fixture rule.
#[derive(Debug, Clone, Deserialize)]
pub struct RuleMatch {
    /// `"chat"` or `"embed"`.
    pub kind: String,
    /// If set, the request's model must equal this.
    #[serde(default)]
    pub model: Option<String>,
    /// If set, some message content (chat) or input text (embed) must
    /// contain this substring.
    #[serde(default)]
    pub contains: Option<String>,
}

/// Response half of a fixture rule.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct RuleResponse {
    /// HTTP status to script; defaults to 200.
    #[serde(default)]
    pub status: Option<u16>,
    /// Chat reply text.
    #[serde(default)]
    pub text: Option<String>,
    /// Chat tool calls, as `{name, arguments}` pairs.
    #[serde(default)]
    pub tool_calls: Option<Vec<MockToolCall>>,
    /// Exact usage to report; if absent, usage is estimated from text sizes.
    #[serde(default)]
    pub usage: Option<MockUsage>,
    /// Embedding dimension (embed rules only).
    #[serde(default)]
    pub dim: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct MockToolCall {
    pub name: String,
    pub arguments: serde_json::Value,
}

#[derive(Debug, Clone, Copy, Deserialize)]
pub struct MockUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, Deserialize)]
pub struct FixtureRule {
    #[serde(rename = "match")]
    pub matcher: RuleMatch,
    /// How many requests this rule may answer; absent = unlimited.
    #[serde(default)]
    pub times: Option<u64>,
    pub response: RuleResponse,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Fixture {
    pub rules: Vec<FixtureRule>,
}

/// Transport that answers from a fixture script and records every request.
pub struct MockTransport {
    rules: Vec<FixtureRule>,
    remaining: Mutex<Vec<Option<u64>>>,
    log: Mutex<Vec<(Endpoint, String)>>,
}

impl MockTransport {
    pub fn new(fixture: Fixture) -> Self {
        let remaining = fixture.rules.iter().map(|r| r.times).collect();
        MockTransport {
            rules: fixture.rules,
            remaining: Mutex::new(remaining),
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn from_fixture_str(json: &str) -> Result<Self, String> {
        let fixture: Fixture =
            serde_json::from_str(json).map_err(|e| format!("invalid mock fixture: {e}"))?;
        Ok(Self::new(fixture))
    }

    pub fn from_fixture_file(path: &Path) -> Result<Self, String> {
        let data = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read fixture {}: {e}", path.display()))?;
        Self::from_fixture_str(&data)
    }

    /// Total requests seen on one endpoint.
    pub fn calls(&self, endpoint: Endpoint) -> usize {
        self.log
            .lock()
            .unwrap()
            .iter()
            .filter(|(e, _)| *e == endpoint)
            .count()
    }

    pub fn total_calls(&self) -> usize {
        self.log.lock().unwrap().len()
    }

    /// Serialized request bodies in arrival order, prefixed by endpoint.
    /// Two identical harness runs must produce identical logs.
    pub fn request_log(&self) -> Vec<String> {
        self.log
            .lock()
            .unwrap()
            .iter()
            .map(|(e, body)| format!("{e:?} {body}"))
            .collect()
    }

    fn matches(rule: &RuleMatch, endpoint: Endpoint, body: &serde_json::Value) -> bool {
        let kind_ok = match endpoint {
            Endpoint::Chat => rule.kind == "chat",
            Endpoint::Embed => rule.kind == "embed",
        };
        if !kind_ok {
            return false;
        }
        if let Some(model) = &rule.model {
            if body.get("model").and_then(|m| m.as_str()) != Some(model.as_str()) {
                return false;
            }
        }
        if let Some(needle) = &rule.contains {
            let haystacks: Vec<&str> = match endpoint {
                Endpoint::Chat => body
                    .get("messages")
                    .and_then(|m| m.as_array())
                    .map(|msgs| {
                        msgs.iter()
                            .filter_map(|m| m.get("content").and_then(|c| c.as_str()))
                            .collect()
                    })
                    .unwrap_or_default(),
                Endpoint::Embed => body
                    .get("input")
                    .and_then(|i| i.as_array())
                    .map(|texts| texts.iter().filter_map(|t| t.as_str()).collect())
                    .unwrap_or_default(),
            };
            if !haystacks.iter().any(|h| h.contains(needle.as_str())) {
                return false;
            }
        }
        true
    }

    fn chat_body(resp: &RuleResponse, request: &serde_json::Value) -> serde_json::Value {
        let text = resp.text.clone().unwrap_or_default();
        let usage = resp.usage.map(|u| (u.prompt_tokens, u.completion_tokens)).unwrap_or_else(|| {
            // Estimate with the 4-chars-per-token default so usage flows
            // look plausible without being scripted.
            let prompt_chars: usize = request
                .get("messages")
                .and_then(|m| m.as_array())
                .map(|msgs| {
                    msgs.iter()
                        .filter_map(|m| m.get("content").and_then(|c| c.as_str()))
                        .map(|c| c.chars().count())
                        .sum()
                })
                .unwrap_or(0);
            (
                (prompt_chars as u64).div_ceil(4),
                (text.chars().count() as u64).div_ceil(4),
            )
        });
        let tool_calls: Vec<serde_json::Value> = resp
            .tool_calls
            .iter()
            .flatten()
            .map(|tc| {
                serde_json::json!({
                    "type": "function",
                    "function": {
                        "name": tc.name,
                        // Live endpoints send arguments as a JSON string.
                        "arguments": tc.arguments.to_string(),
                    }
                })
            })
            .collect();
        let mut message = serde_json::json!({ "role": "assistant", "content": text });
        if !tool_calls.is_empty() {
            message["tool_calls"] = serde_json::Value::Array(tool_calls);
        }
        serde_json::json!({
            "choices": [{ "message": message }],
            "usage": { "prompt_tokens": usage.0, "completion_tokens": usage.1 }
        })
    }

    fn embed_body(resp: &RuleResponse, request: &serde_json::Value) -> serde_json::Value {
        let dim = resp.dim.unwrap_or(8);
        let texts: Vec<&str> = request
            .get("input")
            .and_then(|i| i.as_array())
            .map(|arr| arr.iter().filter_map(|t| t.as_str()).collect())
            .unwrap_or_default();
        let data: Vec<serde_json::Value> = texts
            .iter()
            .enumerate()
            .map(|(i, text)| {
                serde_json::json!({ "index": i, "embedding": deterministic_vector(text, dim) })
            })
            .collect();
        let prompt_chars: usize = texts.iter().map(|t| t.chars().count()).sum();
        serde_json::json!({
            "data": data,
            "usage": { "prompt_tokens": (prompt_chars as u64).div_ceil(4), "completion_tokens": 0 }
        })
    }
}

/// Unit-scaled vector derived from a SHA-256 of the text: the same text
/// always embeds identically, across processes and platforms.
pub fn deterministic_vector(text: &str, dim: usize) -> Vec<f32> {
    let digest = Sha256::digest(text.as_bytes());
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    let mut rng = ChaCha8Rng::from_seed(seed);
    (0..dim).map(|_| rng.gen_range(-1.0f32..1.0f32)).collect()
}

impl Transport for MockTransport {
    fn send(&self, endpoint: Endpoint, body: &serde_json::Value) -> Result<WireResponse, WireFailure> {
        self.log
            .lock()
            .unwrap()
            .push((endpoint, body.to_string()));
        let mut remaining = self.remaining.lock().unwrap();
        for (i, rule) in self.rules.iter().enumerate() {
            if remaining[i] == Some(0) {
                continue;
            }
            if !Self::matches(&rule.matcher, endpoint, body) {
                continue;
            }
            if let Some(n) = remaining[i].as_mut() {
                *n -= 1;
            }
            let status = rule.response.status.unwrap_or(200);
            if status != 200 {
                return Ok(WireResponse {
                    status,
                    body: serde_json::json!({
                        "error": { "message": format!("mock scripted status {status}") }
                    }),
                });
            }
            let body = match endpoint {
                Endpoint::Chat => Self::chat_body(&rule.response, body),
                Endpoint::Embed => Self::embed_body(&rule.response, body),
            };
            return Ok(WireResponse { status: 200, body });
        }
        Err(WireFailure::Other(format!(
            "mock fixture: no rule matched a {endpoint:?} request for model {:?}",
            body.get("model").and_then(|m| m.as_str()).unwrap_or("?")
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_matching_rule_wins_and_times_sequences() {
        let mock = MockTransport::from_fixture_str(
            r#"{"rules":[
                {"match":{"kind":"chat"},"times":2,"response":{"status":500}},
                {"match":{"kind":"chat"},"response":{"text":"ok"}}
            ]}"#,
        )
        .unwrap();
        let body = serde_json::json!({"model":"m","messages":[{"role":"user","content":"hi"}]});
        for _ in 0..2 {
            let resp = mock.send(Endpoint::Chat, &body).unwrap();
            assert_eq!(resp.status, 500);
        }
        let resp = mock.send(Endpoint::Chat, &body).unwrap();
        assert_eq!(resp.status, 200);
        assert_eq!(
            resp.body["choices"][0]["message"]["content"].as_str().unwrap(),
            "ok"
        );
        assert_eq!(mock.calls(Endpoint::Chat), 3);
    }

    #[test]
    fn contains_and_model_matchers_filter() {
        let mock = MockTransport::from_fixture_str(
            r#"{"rules":[
                {"match":{"kind":"chat","model":"m1","contains":"apple"},"response":{"text":"fruit"}},
                {"match":{"kind":"chat"},"response":{"text":"fallback"}}
            ]}"#,
        )
        .unwrap();
        let hit = serde_json::json!({"model":"m1","messages":[{"role":"user","content":"an apple a day"}]});
        let miss = serde_json::json!({"model":"m2","messages":[{"role":"user","content":"an apple a day"}]});
        assert_eq!(
            mock.send(Endpoint::Chat, &hit).unwrap().body["choices"][0]["message"]["content"],
            "fruit"
        );
        assert_eq!(
            mock.send(Endpoint::Chat, &miss).unwrap().body["choices"][0]["message"]["content"],
            "fallback"
        );
    }

    #[test]
    fn embed_vectors_are_deterministic_per_text() {
        let a = deterministic_vector("same text", 16);
        let b = deterministic_vector("same text", 16);
        let c = deterministic_vector("other text", 16);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 16);
        assert!(a.iter().all(|x| (-1.0..1.0).contains(x)));
    }

    #[test]
    fn embed_rule_returns_one_vector_per_input() {
        let mock = MockTransport::from_fixture_str(
            r#"{"rules":[{"match":{"kind":"embed"},"response":{"dim":4}}]}"#,
        )
        .unwrap();
        let body = serde_json::json!({"model":"e","input":["a","b","c"]});
        let resp = mock.send(Endpoint::Embed, &body).unwrap();
        let data = resp.body["data"].as_array().unwrap();
        assert_eq!(data.len(), 3);
        assert_eq!(data[0]["embedding"].as_array().unwrap().len(), 4);
    }

    #[test]
    fn unmatched_request_is_a_hard_failure() {
        let mock = MockTransport::from_fixture_str(r#"{"rules":[]}"#).unwrap();
        let body = serde_json::json!({"model":"m","messages":[]});
        assert!(matches!(
            mock.send(Endpoint::Chat, &body),
            Err(WireFailure::Other(_))
        ));
    }
}
