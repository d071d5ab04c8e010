//! Method runners: execute one question through a comparison method and
//! produce an answer plus a trajectory log.
//!
//! Four methods are implemented — full-context (with sliding windows for
//! oversized contexts), RAG, a ReAct tool loop, and an external coding agent
//! driven over a prepared workspace. Every runner writes one trajectory file
//! and returns a [`RunResult`]; under the mock transport with a fixed seed,
//! both are byte-for-byte reproducible.

pub mod coding_agent;
pub mod full_context;
pub mod rag;
pub mod react;
pub mod windows;

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::corpus::{sanitize_filename, CorpusError};
use crate::gateway::types::{ChatRequest, ChatResponse, TokenUsage};
use crate::gateway::{Gateway, GatewayError};
use crate::prompts::PromptError;
use crate::retriever::RetrieverError;
use crate::trace::{parse_trajectory, EventKind, TraceClock, TraceError, TrajectoryWriter};
use crate::types::Question;

pub use windows::{plan_windows, WindowPlan, DEFAULT_OVERLAP_TOKENS, DEFAULT_WINDOW_TOKENS};

/// Token approximation used wherever provider tokenizers are unavailable.
pub const DEFAULT_CHARS_PER_TOKEN: u64 = 4;

#[derive(Debug, thiserror::Error)]
pub enum RunnerError {
    #[error("overlap {overlap} must be smaller than window {window}")]
    InvalidOverlap { window: u64, overlap: u64 },
    #[error("question {question_id}: {source}")]
    Gateway {
        question_id: String,
        #[source]
        source: GatewayError,
    },
    #[error("unknown tool: {0}")]
    UnknownTool(String),
    #[error("failed to launch agent: {0}")]
    AgentSpawnError(String),
    #[error("agent exceeded the {}s wall-clock timeout", .0.as_secs())]
    AgentTimeout(std::time::Duration),
    #[error("agent finished without a final message")]
    AnswerExtractionFailure,
    #[error("configuration: {0}")]
    ConfigError(String),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Retriever(#[from] RetrieverError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The output of running one question through one method.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunResult {
    pub question_id: String,
    pub method: String,
    pub model: String,
    pub answer_text: String,
    pub trajectory_path: PathBuf,
    pub usage: TokenUsage,
    pub wall_time: f64,
    /// Non-fatal conditions hit during the run (`truncated`,
    /// `unknown-tool:<name>`, `agent-exit-<code>`, …).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl RunResult {
    /// Check the structural invariant: the trajectory file exists and parses.
    pub fn validate(&self) -> Result<(), RunnerError> {
        parse_trajectory(&self.trajectory_path)?;
        Ok(())
    }
}

/// Shared environment for all runners: gateway, model, trajectory placement,
/// and the determinism switch used by mock runs.
pub struct RunnerCtx<'a> {
    pub gateway: &'a Gateway,
    pub model: String,
    pub trajectories_dir: PathBuf,
    /// When set, trajectories use a logical clock and wall times report 0.0
    /// so repeated mock runs are byte-identical.
    pub deterministic: bool,
}

impl RunnerCtx<'_> {
    pub fn trajectory_path(&self, question_id: &str) -> PathBuf {
        self.trajectories_dir
            .join(format!("{}.jsonl", sanitize_filename(question_id)))
    }

    pub(crate) fn writer(&self, question_id: &str) -> Result<TrajectoryWriter, RunnerError> {
        let clock = if self.deterministic {
            TraceClock::Logical(0)
        } else {
            TraceClock::Wall(Instant::now())
        };
        Ok(TrajectoryWriter::create(
            &self.trajectory_path(question_id),
            clock,
        )?)
    }

    /// One chat call, its response logged as a model-message event.
    pub(crate) fn chat_logged(
        &self,
        writer: &mut TrajectoryWriter,
        question_id: &str,
        req: &ChatRequest,
    ) -> Result<ChatResponse, RunnerError> {
        let resp = self
            .gateway
            .chat(req)
            .map_err(|source| RunnerError::Gateway {
                question_id: question_id.to_string(),
                source,
            })?;
        writer.record(
            EventKind::ModelMessage,
            resp.text.clone(),
            Some(resp.text.len() as u64),
            Some(resp.usage),
        )?;
        Ok(resp)
    }

    pub(crate) fn elapsed(&self, start: Instant) -> f64 {
        if self.deterministic {
            0.0
        } else {
            start.elapsed().as_secs_f64()
        }
    }
}

/// Template variables shared by all prompt renderings for a question: the
/// question text under both placeholder casings, plus the four choices when
/// present.
pub fn question_vars(q: &Question) -> HashMap<String, String> {
    let mut vars = HashMap::new();
    vars.insert("question".to_string(), q.text.clone());
    vars.insert("Question".to_string(), q.text.clone());
    if let Some(choices) = &q.choices {
        for (letter, choice) in ["A", "B", "C", "D"].iter().zip(choices.iter()) {
            vars.insert(format!("Choice_{letter}"), choice.clone());
        }
    }
    vars
}

/// Derive a per-question seed from the experiment seed, so questions sample
/// independently but reproducibly (FNV-1a over the question id, xor-folded).
pub fn question_seed(experiment_seed: u64, question_id: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in question_id.as_bytes() {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(0x100_0000_01b3);
    }
    experiment_seed ^ hash
}

/// Clamp a byte offset down to the nearest UTF-8 character boundary.
pub(crate) fn clamp_char_boundary(text: &str, mut offset: usize) -> usize {
    offset = offset.min(text.len());
    while !text.is_char_boundary(offset) {
        offset -= 1;
    }
    offset
}

/// Approximate token count of a text under the default 4-chars-per-token rule.
pub fn approx_tokens(text: &str, chars_per_token: u64) -> u64 {
    (text.len() as u64).div_ceil(chars_per_token)
}

/// Read the context file of a long-document datapoint.
pub fn read_datapoint_text(dataset_root: &Path, datapoint_id: &str) -> Result<String, RunnerError> {
    let path = dataset_root.join(format!("{}.txt", sanitize_filename(datapoint_id)));
    if !path.exists() {
        return Err(RunnerError::Retriever(RetrieverError::UnknownDatapoint(
            datapoint_id.to_string(),
        )));
    }
    Ok(std::fs::read_to_string(path)?)
}
