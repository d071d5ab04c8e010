//! Experiment configuration: one file per (dataset, method, retriever, model)
//! cell of the comparison matrix. TOML is the hand-edited format; a JSON
//! mirror of every snapshot is written for programmatic generation.

use std::path::{Path, PathBuf};

use fsnav_core::retriever::RetrieverKind;
use fsnav_core::types::{Dataset, Method};
use serde::{Deserialize, Serialize};

use crate::config_failure;

/// Which retriever a method uses, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RetrieverChoice {
    #[default]
    None,
    Bm25,
    Dense,
}

impl RetrieverChoice {
    pub fn label(&self) -> &'static str {
        match self {
            RetrieverChoice::None => "none",
            RetrieverChoice::Bm25 => "bm25",
            RetrieverChoice::Dense => "dense",
        }
    }

    /// Concrete retriever kind; dense needs the embedding model tag.
    pub fn kind(&self, embedding_model: Option<&str>) -> Option<RetrieverKind> {
        match self {
            RetrieverChoice::None => None,
            RetrieverChoice::Bm25 => Some(RetrieverKind::Bm25),
            RetrieverChoice::Dense => {
                embedding_model.map(|m| RetrieverKind::Dense(m.to_string()))
            }
        }
    }
}

/// Per-run resource limits.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budgets {
    /// Maximum reason/act iterations for the tool-calling loop.
    pub max_steps: usize,
    /// Wall-clock limit per external agent invocation.
    pub agent_timeout_s: u64,
    /// Token budget when packing corpus documents into a prompt context.
    pub context_token_budget: u64,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            max_steps: 30,
            agent_timeout_s: 120,
            context_token_budget: 100_000,
        }
    }
}

/// One experiment cell: everything `run` needs to produce a results
/// directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: Dataset,
    pub method: Method,
    #[serde(default)]
    pub retriever: RetrieverChoice,
    /// Model for chat calls (for external agents: the label recorded in
    /// results and priced in cost reports).
    pub model: String,
    #[serde(default)]
    pub judge_model: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_sample_n")]
    pub sample_n: usize,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub budgets: Budgets,
    /// Root of the materialized corpus or long-document dataset.
    pub corpus: PathBuf,
    /// JSONL file of benchmark questions.
    pub questions: PathBuf,
    /// Embedding model tag; required when retriever = dense.
    #[serde(default)]
    pub embedding_model: Option<String>,
    /// Agent argv template ({workspace} and {prompt_file} are substituted);
    /// required when method = coding_agent.
    #[serde(default)]
    pub agent_command: Vec<String>,
    /// Retriever CLI path exported to agent workspaces.
    #[serde(default)]
    pub retriever_bin: Option<PathBuf>,
    #[serde(default)]
    pub keep_workspaces: bool,
}

fn default_sample_n() -> usize {
    fsnav_core::eval::DEFAULT_SAMPLE_N
}

fn default_workers() -> usize {
    1
}

impl ExperimentConfig {
    /// Load from TOML (`.toml`) or JSON (`.json`), by extension.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let data = std::fs::read_to_string(path)
            .map_err(|e| config_failure(format!("cannot read config {}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e == "json");
        let config: ExperimentConfig = if is_json {
            serde_json::from_str(&data)
                .map_err(|e| config_failure(format!("invalid config {}: {e}", path.display())))?
        } else {
            toml::from_str(&data)
                .map_err(|e| config_failure(format!("invalid config {}: {e}", path.display())))?
        };
        Ok(config)
    }

    /// Write `config.toml` and its JSON mirror `config.json` under `dir`.
    pub fn save_snapshot(&self, dir: &Path) -> anyhow::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("config.toml"), toml::to_string_pretty(self)?)?;
        std::fs::write(
            dir.join("config.json"),
            serde_json::to_string_pretty(self)?,
        )?;
        Ok(())
    }

    /// Cross-field invariants; violations are config failures (exit 3).
    pub fn validate(&self) -> anyhow::Result<()> {
        if self.model.is_empty() {
            return Err(config_failure("model must not be empty"));
        }
        if self.sample_n == 0 {
            return Err(config_failure("sample_n must be positive"));
        }
        if self.workers == 0 {
            return Err(config_failure("workers must be positive"));
        }
        match self.method {
            Method::Rag | Method::React => {
                if self.retriever == RetrieverChoice::None {
                    return Err(config_failure(format!(
                        "method {} requires a retriever (bm25 or dense)",
                        self.method
                    )));
                }
            }
            Method::FullContext => {
                if self.retriever != RetrieverChoice::None {
                    return Err(config_failure(
                        "full_context does not use a retriever; set retriever = \"none\"",
                    ));
                }
            }
            Method::CodingAgent => {
                if self.agent_command.is_empty() {
                    return Err(config_failure(
                        "method coding_agent requires agent_command",
                    ));
                }
            }
        }
        if self.retriever == RetrieverChoice::Dense
            && self.embedding_model.as_deref().unwrap_or("").is_empty()
        {
            return Err(config_failure(
                "retriever dense requires embedding_model",
            ));
        }
        Ok(())
    }

    /// Retriever kind for this config, when one is configured.
    pub fn retriever_kind(&self) -> Option<RetrieverKind> {
        self.retriever.kind(self.embedding_model.as_deref())
    }

    /// Row label in reports: the method id plus the retriever variant.
    pub fn method_label(&self) -> String {
        match self.retriever {
            RetrieverChoice::None => self.method.id().to_string(),
            _ => format!("{}+{}", self.method.id(), self.retriever.label()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_toml() -> String {
        r#"
dataset = "browsecomp-plus"
method = "rag"
retriever = "bm25"
model = "chat-model"
seed = 7
sample_n = 5
corpus = "/tmp/corpus"
questions = "/tmp/questions.jsonl"
"#
        .to_string()
    }

    #[test]
    fn toml_and_json_mirror_parse_identically() {
        let from_toml: ExperimentConfig = toml::from_str(&base_toml()).unwrap();
        let json = serde_json::to_string(&from_toml).unwrap();
        let from_json: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(from_json.dataset, Dataset::BrowseCompPlus);
        assert_eq!(from_json.method, Method::Rag);
        assert_eq!(from_json.retriever, RetrieverChoice::Bm25);
        assert_eq!(from_json.sample_n, 5);
        assert_eq!(from_json.workers, 1);
        assert_eq!(from_json.budgets.max_steps, 30);
        from_json.validate().unwrap();
        assert_eq!(from_json.method_label(), "rag+bm25");
    }

    #[test]
    fn invariants_are_enforced() {
        let mut cfg: ExperimentConfig = toml::from_str(&base_toml()).unwrap();
        cfg.retriever = RetrieverChoice::None;
        assert!(cfg.validate().is_err(), "rag without retriever");

        let mut cfg: ExperimentConfig = toml::from_str(&base_toml()).unwrap();
        cfg.retriever = RetrieverChoice::Dense;
        assert!(cfg.validate().is_err(), "dense without embedding_model");
        cfg.embedding_model = Some("embed-1".into());
        cfg.validate().unwrap();
        assert_eq!(
            cfg.retriever_kind(),
            Some(RetrieverKind::Dense("embed-1".into()))
        );

        let mut cfg: ExperimentConfig = toml::from_str(&base_toml()).unwrap();
        cfg.method = Method::CodingAgent;
        assert!(cfg.validate().is_err(), "coding agent without command");
        cfg.agent_command = vec!["agent".into()];
        cfg.validate().unwrap();

        let mut cfg: ExperimentConfig = toml::from_str(&base_toml()).unwrap();
        cfg.method = Method::FullContext;
        assert!(cfg.validate().is_err(), "full_context rejects retriever");
        cfg.retriever = RetrieverChoice::None;
        cfg.validate().unwrap();
        assert_eq!(cfg.method_label(), "full_context");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = format!("{}typo_field = 1\n", base_toml());
        assert!(toml::from_str::<ExperimentConfig>(&bad).is_err());
    }
}
