//! RAG runner: retrieve top-k units for the question, then answer in one
//! chat call over the retrieved context.

use std::time::Instant;

use crate::gateway::types::{ChatMessage, ChatRequest};
use crate::prompts::{method_template_id, render_prompt};
use crate::retriever::Retriever;
use crate::trace::{tool_call_payload, EventKind};
use crate::types::{Method, Question};

use super::{question_vars, RunResult, RunnerCtx, RunnerError};

/// Retrieval depth: top 10 documents (corpus tasks) or chunks (long-document
/// tasks).
pub const RAG_TOP_K: usize = 10;

/// Retrieve `k` units with the raw question text as the query and answer with
/// a single chat call over their concatenation (rank order, blank-line
/// separated). Fewer than `k` indexed units means all of them are used.
pub fn run_rag(
    ctx: &RunnerCtx,
    q: &Question,
    retriever: &Retriever,
    k: usize,
) -> Result<RunResult, RunnerError> {
    let started = Instant::now();
    let mut writer = ctx.writer(&q.id)?;

    let hits = retriever.search(&q.text, k)?;
    let context = hits
        .iter()
        .map(|h| h.text.as_str())
        .collect::<Vec<_>>()
        .join("\n\n");
    writer.record(
        EventKind::ToolCall,
        tool_call_payload(
            "retrieve",
            &serde_json::json!({ "query": q.text, "k": k }),
        ),
        Some(context.len() as u64),
        None,
    )?;

    let mut vars = question_vars(q);
    vars.insert("Context".to_string(), context);
    let prompt = render_prompt(&method_template_id(Method::FullContext, q.dataset), &vars)?;
    let resp = ctx.chat_logged(
        &mut writer,
        &q.id,
        &ChatRequest::new(&ctx.model, vec![ChatMessage::user(prompt)]),
    )?;

    let trajectory_path = writer.path().to_path_buf();
    writer.finish()?;
    Ok(RunResult {
        question_id: q.id.clone(),
        method: Method::Rag.id().to_string(),
        model: ctx.model.clone(),
        answer_text: resp.text,
        trajectory_path,
        usage: resp.usage,
        wall_time: ctx.elapsed(started),
        flags: Vec::new(),
    })
}
