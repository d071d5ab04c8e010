//! ReAct runner: interleave model reasoning with `retrieve` and
//! `get_document` tool calls until the model answers or the step budget runs
//! out.

use std::time::Instant;

use crate::gateway::types::{ChatMessage, ChatRequest, TokenUsage, ToolCall, ToolSchema};
use crate::prompts::{method_template_id, render_prompt};
use crate::retriever::{format_hits, Retriever};
use crate::trace::{tool_call_payload, EventKind};
use crate::types::{Method, Question};

use super::{question_vars, RunResult, RunnerCtx, RunnerError};

/// Chat-call budget per question; bounded for cost.
pub const DEFAULT_MAX_STEPS: usize = 30;
/// Results per `retrieve` call unless the model asks for more.
pub const DEFAULT_RETRIEVE_K: usize = 5;

/// Schemas for the two tools the loop exposes.
pub fn tool_schemas() -> Vec<ToolSchema> {
    vec![
        ToolSchema {
            name: "retrieve".into(),
            description: "Search the indexed corpus and return the top-k most relevant units."
                .into(),
            parameters: serde_json::json!({
                "type": "object",
                "properties": {
                    "query": { "type": "string", "description": "search query" },
                    "k": { "type": "integer", "description": "number of results", "default": DEFAULT_RETRIEVE_K }
                },
                "required": ["query"]
            }),
        },
        ToolSchema {
            name: "get_document".into(),
            description: "Fetch the full text of a unit by its id (as returned by retrieve)."
                .into(),
            parameters: serde_json::json!({
                "type": "object",
                "properties": {
                    "id": { "type": "string", "description": "unit id" }
                },
                "required": ["id"]
            }),
        },
    ]
}

fn execute_tool(call: &ToolCall, retriever: &Retriever, flags: &mut Vec<String>) -> String {
    match call.name.as_str() {
        "retrieve" => {
            let Some(query) = call.arguments.get("query").and_then(|q| q.as_str()) else {
                return "error: retrieve requires a string `query` argument".to_string();
            };
            let k = call
                .arguments
                .get("k")
                .and_then(|k| k.as_u64())
                .map(|k| k as usize)
                .unwrap_or(DEFAULT_RETRIEVE_K);
            match retriever.search(query, k) {
                Ok(hits) if hits.is_empty() => "no results".to_string(),
                Ok(hits) => format_hits(&hits),
                Err(e) => format!("error: retrieval failed: {e}"),
            }
        }
        "get_document" => {
            let Some(id) = call.arguments.get("id").and_then(|i| i.as_str()) else {
                return "error: get_document requires a string `id` argument".to_string();
            };
            match retriever.get_unit(id) {
                Some(text) => text.to_string(),
                None => format!("error: unknown document id: {id}"),
            }
        }
        other => {
            flags.push(format!("unknown-tool:{other}"));
            format!(
                "error: {}. Available tools: retrieve, get_document",
                RunnerError::UnknownTool(other.to_string())
            )
        }
    }
}

/// Run the tool loop. Terminates on the first response without tool calls
/// (its text is the answer) or after `max_steps` chat calls, in which case
/// the result carries a `truncated` flag and the last text seen.
pub fn run_react(
    ctx: &RunnerCtx,
    q: &Question,
    retriever: &Retriever,
    max_steps: usize,
) -> Result<RunResult, RunnerError> {
    let started = Instant::now();
    let mut writer = ctx.writer(&q.id)?;
    let mut usage = TokenUsage::default();
    let mut flags = Vec::new();

    let prompt = render_prompt(
        &method_template_id(Method::React, q.dataset),
        &question_vars(q),
    )?;
    let mut messages = vec![ChatMessage::user(prompt)];
    let schemas = tool_schemas();

    let mut answer_text = String::new();
    let mut answered = false;
    for _ in 0..max_steps.max(1) {
        let mut req = ChatRequest::new(&ctx.model, messages.clone());
        req.tool_schemas = Some(schemas.clone());
        let resp = ctx.chat_logged(&mut writer, &q.id, &req)?;
        usage.add(resp.usage);
        if !resp.text.is_empty() {
            answer_text = resp.text.clone();
        }
        if resp.tool_calls.is_empty() {
            answer_text = resp.text;
            answered = true;
            break;
        }
        // Mirror the model turn, then feed each tool result back.
        let assistant_echo = if resp.text.is_empty() {
            resp.tool_calls
                .iter()
                .map(|c| format!("[tool call] {}({})", c.name, c.arguments))
                .collect::<Vec<_>>()
                .join("\n")
        } else {
            resp.text.clone()
        };
        messages.push(ChatMessage::assistant(assistant_echo));
        for call in &resp.tool_calls {
            let result = execute_tool(call, retriever, &mut flags);
            writer.record(
                EventKind::ToolCall,
                tool_call_payload(&call.name, &call.arguments),
                Some(result.len() as u64),
                None,
            )?;
            messages.push(ChatMessage::tool(result));
        }
    }
    if !answered {
        flags.push("truncated".to_string());
    }

    let trajectory_path = writer.path().to_path_buf();
    writer.finish()?;
    Ok(RunResult {
        question_id: q.id.clone(),
        method: Method::React.id().to_string(),
        model: ctx.model.clone(),
        answer_text,
        trajectory_path,
        usage,
        wall_time: ctx.elapsed(started),
        flags,
    })
}
