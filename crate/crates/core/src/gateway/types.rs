//! Request/response types shared by the live and mock transports.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::GatewayError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
    Tool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::System,
            content: content.into(),
        }
    }
    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::User,
            content: content.into(),
        }
    }
    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::Assistant,
            content: content.into(),
        }
    }
    pub fn tool(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::Tool,
            content: content.into(),
        }
    }
}

/// JSON-schema description of a tool the model may call.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToolSchema {
    pub name: String,
    pub description: String,
    pub parameters: serde_json::Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_schemas: Option<Vec<ToolSchema>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_output_tokens: Option<u32>,
}

impl ChatRequest {
    pub fn new(model: impl Into<String>, messages: Vec<ChatMessage>) -> Self {
        ChatRequest {
            model: model.into(),
            messages,
            tool_schemas: None,
            max_output_tokens: None,
        }
    }

    /// Enforce the structural invariants before a request goes on the wire.
    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.messages.is_empty() {
            return Err(GatewayError::InvalidRequest(
                "chat request must carry at least one message".into(),
            ));
        }
        if let Some(tools) = &self.tool_schemas {
            let mut seen = std::collections::HashSet::new();
            for t in tools {
                if !seen.insert(&t.name) {
                    return Err(GatewayError::InvalidRequest(format!(
                        "duplicate tool name: {}",
                        t.name
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A tool invocation requested by the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    pub name: String,
    pub arguments: serde_json::Value,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl TokenUsage {
    pub fn new(prompt_tokens: u64, completion_tokens: u64) -> Self {
        TokenUsage {
            prompt_tokens,
            completion_tokens,
        }
    }

    pub fn add(&mut self, other: TokenUsage) {
        self.prompt_tokens += other.prompt_tokens;
        self.completion_tokens += other.completion_tokens;
    }

    pub fn total(&self) -> u64 {
        self.prompt_tokens + self.completion_tokens
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    pub tool_calls: Vec<ToolCall>,
    pub usage: TokenUsage,
}

/// Per-model prices in USD per million tokens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelPrice {
    pub usd_per_million_prompt_tokens: f64,
    pub usd_per_million_completion_tokens: f64,
}

/// Price schedule. Ships empty; supplied by the user as a TOML file:
///
/// ```toml
/// [models."some-model-name"]
/// usd_per_million_prompt_tokens = 1.25
/// usd_per_million_completion_tokens = 10.0
/// ```
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PriceTable {
    #[serde(default)]
    pub models: BTreeMap<String, ModelPrice>,
}

impl PriceTable {
    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let data = std::fs::read_to_string(path)
            .map_err(|e| GatewayError::Config(format!("cannot read {}: {e}", path.display())))?;
        let table: PriceTable = toml::from_str(&data)
            .map_err(|e| GatewayError::Config(format!("cannot parse {}: {e}", path.display())))?;
        for (model, price) in &table.models {
            if price.usd_per_million_prompt_tokens < 0.0
                || price.usd_per_million_completion_tokens < 0.0
            {
                return Err(GatewayError::Config(format!(
                    "negative price for model {model}"
                )));
            }
        }
        Ok(table)
    }

    pub fn get(&self, model: &str) -> Result<&ModelPrice, GatewayError> {
        self.models
            .get(model)
            .ok_or_else(|| GatewayError::UnknownModel(model.to_string()))
    }
}

/// Dollar cost of one call: `prompt·p_in/10⁶ + completion·p_out/10⁶`.
pub fn cost(usage: &TokenUsage, model: &str, prices: &PriceTable) -> Result<f64, GatewayError> {
    let price = prices.get(model)?;
    Ok(usage.prompt_tokens as f64 * price.usd_per_million_prompt_tokens / 1e6
        + usage.completion_tokens as f64 * price.usd_per_million_completion_tokens / 1e6)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(p_in: f64, p_out: f64) -> PriceTable {
        let mut t = PriceTable::default();
        t.models.insert(
            "m".into(),
            ModelPrice {
                usd_per_million_prompt_tokens: p_in,
                usd_per_million_completion_tokens: p_out,
            },
        );
        t
    }

    #[test]
    fn zero_usage_costs_zero() {
        assert_eq!(cost(&TokenUsage::new(0, 0), "m", &table(1.25, 10.0)).unwrap(), 0.0);
    }

    #[test]
    fn a_million_prompt_tokens_costs_the_listed_price() {
        let c = cost(&TokenUsage::new(1_000_000, 0), "m", &table(1.25, 10.0)).unwrap();
        assert!((c - 1.25).abs() < 1e-12);
    }

    #[test]
    fn mixed_usage_combines_both_rates() {
        // 1000·1.25/1e6 + 500·10/1e6 = 0.00125 + 0.005
        let c = cost(&TokenUsage::new(1000, 500), "m", &table(1.25, 10.0)).unwrap();
        assert!((c - 0.00625).abs() < 1e-12);
    }

    #[test]
    fn unpriced_model_is_an_error() {
        let err = cost(&TokenUsage::new(1, 1), "other", &table(1.0, 1.0)).unwrap_err();
        assert!(matches!(err, GatewayError::UnknownModel(m) if m == "other"));
    }

    #[test]
    fn price_table_loads_from_toml() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("prices.toml");
        std::fs::write(
            &path,
            "[models.\"m1\"]\nusd_per_million_prompt_tokens = 2.0\nusd_per_million_completion_tokens = 8.0\n",
        )
        .unwrap();
        let table = PriceTable::load(&path).unwrap();
        assert_eq!(table.get("m1").unwrap().usd_per_million_completion_tokens, 8.0);
    }

    #[test]
    fn negative_prices_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("prices.toml");
        std::fs::write(
            &path,
            "[models.\"m1\"]\nusd_per_million_prompt_tokens = -2.0\nusd_per_million_completion_tokens = 8.0\n",
        )
        .unwrap();
        assert!(matches!(
            PriceTable::load(&path),
            Err(GatewayError::Config(_))
        ));
    }

    #[test]
    fn usage_is_additive() {
        let mut a = TokenUsage::new(10, 5);
        a.add(TokenUsage::new(3, 2));
        assert_eq!(a, TokenUsage::new(13, 7));
        assert_eq!(a.total(), 20);
    }

    #[test]
    fn duplicate_tool_names_rejected() {
        let mut req = ChatRequest::new("m", vec![ChatMessage::user("hi")]);
        req.tool_schemas = Some(vec![
            ToolSchema {
                name: "retrieve".into(),
                description: String::new(),
                parameters: serde_json::json!({}),
            },
            ToolSchema {
                name: "retrieve".into(),
                description: String::new(),
                parameters: serde_json::json!({}),
            },
        ]);
        assert!(matches!(
            req.validate(),
            Err(GatewayError::InvalidRequest(_))
        ));
        assert!(ChatRequest::new("m", vec![]).validate().is_err());
    }
}
