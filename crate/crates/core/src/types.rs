//! Domain types shared across the pipeline: benchmarks, methods, questions.

use serde::{Deserialize, Serialize};

/// The five benchmarks the harness runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Dataset {
    #[serde(rename = "browsecomp-plus")]
    BrowseCompPlus,
    #[serde(rename = "longbench")]
    LongBench,
    #[serde(rename = "nq")]
    Nq,
    #[serde(rename = "oolong_real")]
    OolongReal,
    #[serde(rename = "oolong_synthetic")]
    OolongSynthetic,
}

impl Dataset {
    pub const ALL: [Dataset; 5] = [
        Dataset::BrowseCompPlus,
        Dataset::LongBench,
        Dataset::Nq,
        Dataset::OolongReal,
        Dataset::OolongSynthetic,
    ];

    /// Canonical id, as used in CLI flags, directory names, and the
    /// retriever's `--dataset` argument.
    pub fn id(&self) -> &'static str {
        match self {
            Dataset::BrowseCompPlus => "browsecomp-plus",
            Dataset::LongBench => "longbench",
            Dataset::Nq => "nq",
            Dataset::OolongReal => "oolong_real",
            Dataset::OolongSynthetic => "oolong_synthetic",
        }
    }

    pub fn parse(s: &str) -> Option<Dataset> {
        Dataset::ALL.iter().copied().find(|d| d.id() == s)
    }

    /// Corpus datasets retrieve whole documents from a document collection;
    /// the rest are long-document datasets retrieving chunks of one text.
    pub fn is_corpus(&self) -> bool {
        matches!(self, Dataset::BrowseCompPlus | Dataset::Nq)
    }
}

impl std::fmt::Display for Dataset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

/// The four compared answering methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    FullContext,
    Rag,
    React,
    CodingAgent,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::FullContext,
        Method::Rag,
        Method::React,
        Method::CodingAgent,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Method::FullContext => "full_context",
            Method::Rag => "rag",
            Method::React => "react",
            Method::CodingAgent => "coding_agent",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        Method::ALL.iter().copied().find(|m| m.id() == s)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

/// Reference gold answer, routed by type so scorers never guess from strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GoldAnswer {
    /// Open-ended answers; several acceptable surface forms may be listed.
    Freeform { values: Vec<String> },
    /// One of the four multiple-choice letters.
    McqLetter { letter: char },
    /// Numeric answers scored by distance.
    Numeric { value: f64 },
    /// Categorical answers (labels, dates, users, comparisons) scored by
    /// exact match.
    Label { value: String },
}

/// Where a question's context lives.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ContextRef {
    /// The dataset's shared corpus (whole-collection datasets).
    Corpus,
    /// One long document, named by datapoint id.
    Datapoint { id: String },
}

/// One benchmark question.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub text: String,
    pub gold: GoldAnswer,
    pub dataset: Dataset,
    /// The four options, multiple-choice datasets only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choices: Option<[String; 4]>,
    pub context_ref: ContextRef,
}

impl Question {
    /// Structural check: choices must be present exactly for the
    /// multiple-choice dataset.
    pub fn validate(&self) -> Result<(), String> {
        let mcq = self.dataset == Dataset::LongBench;
        match (mcq, self.choices.is_some()) {
            (true, false) => Err(format!("question {}: choices required", self.id)),
            (false, true) => Err(format!("question {}: unexpected choices", self.id)),
            _ => Ok(()),
        }
    }
}
