//! Full-context runner: hand the model the entire context, sliding a window
//! over it when it exceeds one call's budget and aggregating the per-window
//! answers with a final call.

use std::collections::HashMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{self, CorpusManifest};
use crate::gateway::types::ChatMessage;
use crate::gateway::types::ChatRequest;
use crate::gateway::types::TokenUsage;
use crate::prompts::{aggregate_template_id, method_template_id, render_prompt};
use crate::types::{Dataset, Method, Question};

use super::windows::plan_windows;
use super::{
    approx_tokens, clamp_char_boundary, question_vars, RunResult, RunnerCtx, RunnerError,
    DEFAULT_CHARS_PER_TOKEN, DEFAULT_OVERLAP_TOKENS, DEFAULT_WINDOW_TOKENS,
};

/// Token budget when sampling corpus documents into a single-call context.
pub const DEFAULT_CONTEXT_TOKEN_BUDGET: u64 = 100_000;

#[derive(Debug, Clone)]
pub struct FullContextOptions {
    pub window_tokens: u64,
    pub overlap_tokens: u64,
    pub chars_per_token: u64,
    /// Repeat the context's leading description block at the top of every
    /// window after the first. The numeric-aggregation datasets put the task
    /// description at the start of the file, and later windows would
    /// otherwise lose it.
    pub repeat_header: bool,
}

impl Default for FullContextOptions {
    fn default() -> Self {
        FullContextOptions {
            window_tokens: DEFAULT_WINDOW_TOKENS,
            overlap_tokens: DEFAULT_OVERLAP_TOKENS,
            chars_per_token: DEFAULT_CHARS_PER_TOKEN,
            repeat_header: true,
        }
    }
}

/// Assemble a context for a corpus dataset by sampling whole documents
/// uniformly without replacement (seeded), stopping before the token budget
/// would be exceeded. Documents are joined with blank lines.
pub fn assemble_corpus_context(
    manifest: &CorpusManifest,
    seed: u64,
    budget_tokens: u64,
    chars_per_token: u64,
) -> Result<String, RunnerError> {
    let units = corpus::enumerate_units(manifest)?;
    let mut order: Vec<usize> = (0..units.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut context = String::new();
    for i in order {
        let doc = &units[i].1;
        let added = if context.is_empty() {
            doc.len()
        } else {
            doc.len() + 2
        };
        if approx_tokens(&context, chars_per_token) + (added as u64).div_ceil(chars_per_token)
            > budget_tokens
        {
            break;
        }
        if !context.is_empty() {
            context.push_str("\n\n");
        }
        context.push_str(doc);
    }
    Ok(context)
}

fn leading_header(context: &str) -> &str {
    match context.find("\n\n") {
        Some(i) => &context[..i],
        None => context.lines().next().unwrap_or(""),
    }
}

fn window_slices<'c>(
    context: &'c str,
    options: &FullContextOptions,
) -> Result<Vec<(u64, u64, &'c str)>, RunnerError> {
    let total_tokens = approx_tokens(context, options.chars_per_token).max(1);
    let plan = plan_windows(total_tokens, options.window_tokens, options.overlap_tokens)?;
    let cpt = options.chars_per_token as usize;
    Ok(plan
        .spans
        .iter()
        .map(|&(start, end)| {
            let lo = clamp_char_boundary(context, start as usize * cpt);
            let hi = clamp_char_boundary(context, end as usize * cpt);
            (start, end, &context[lo..hi])
        })
        .collect())
}

/// Answer a question over a fully materialized context string.
///
/// If the context fits one window this is a single chat call; otherwise one
/// call per window followed by an aggregation call that lists every window's
/// answer and re-asks the original question.
pub fn run_full_context(
    ctx: &RunnerCtx,
    q: &Question,
    context: &str,
    options: &FullContextOptions,
) -> Result<RunResult, RunnerError> {
    let started = Instant::now();
    let mut writer = ctx.writer(&q.id)?;
    let mut usage = TokenUsage::default();

    let slices = window_slices(context, options)?;
    let multi = slices.len() > 1;
    let header = if multi && options.repeat_header
        && matches!(q.dataset, Dataset::OolongReal | Dataset::OolongSynthetic)
    {
        Some(leading_header(context).to_string())
    } else {
        None
    };

    let template = method_template_id(Method::FullContext, q.dataset);
    let mut answers: Vec<String> = Vec::with_capacity(slices.len());
    for (i, (_, _, slice)) in slices.iter().enumerate() {
        let window_text = match (&header, i) {
            (Some(h), i) if i > 0 && !slice.starts_with(h.as_str()) => {
                format!("{h}\n\n{slice}")
            }
            _ => (*slice).to_string(),
        };
        let mut vars = question_vars(q);
        vars.insert("Context".to_string(), window_text);
        let prompt = render_prompt(&template, &vars)?;
        let resp = ctx.chat_logged(
            &mut writer,
            &q.id,
            &ChatRequest::new(&ctx.model, vec![ChatMessage::user(prompt)]),
        )?;
        usage.add(resp.usage);
        answers.push(resp.text);
    }

    let answer_text = if multi {
        let mut window_answers = String::new();
        for (i, a) in answers.iter().enumerate() {
            if i > 0 {
                window_answers.push_str("\n\n");
            }
            window_answers.push_str(&format!("Window {}:\n{a}", i + 1));
        }
        let mut vars: HashMap<String, String> = question_vars(q);
        vars.insert("window_answers".to_string(), window_answers);
        let prompt = render_prompt(aggregate_template_id(q.dataset), &vars)?;
        let resp = ctx.chat_logged(
            &mut writer,
            &q.id,
            &ChatRequest::new(&ctx.model, vec![ChatMessage::user(prompt)]),
        )?;
        usage.add(resp.usage);
        resp.text
    } else {
        answers.pop().unwrap_or_default()
    };

    let trajectory_path = writer.path().to_path_buf();
    writer.finish()?;
    Ok(RunResult {
        question_id: q.id.clone(),
        method: Method::FullContext.id().to_string(),
        model: ctx.model.clone(),
        answer_text,
        trajectory_path,
        usage,
        wall_time: ctx.elapsed(started),
        flags: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{materialize_folder, DocumentRecord};
    use crate::gateway::{Gateway, GatewaySettings};
    use crate::types::{ContextRef, GoldAnswer};
    use std::path::Path;
    use tempfile::tempdir;

    fn fixture_gateway(dir: &Path, rules: &str) -> (Gateway, std::sync::Arc<crate::gateway::mock::MockTransport>) {
        let path = dir.join("fixture.json");
        std::fs::write(&path, format!(r#"{{"rules":[{rules}]}}"#)).unwrap();
        Gateway::from_fixture_file(&path, GatewaySettings::default()).unwrap()
    }

    fn question(dataset: Dataset) -> Question {
        Question {
            id: "q1".into(),
            text: "what is the answer?".into(),
            gold: GoldAnswer::Freeform {
                values: vec!["42".into()],
            },
            dataset,
            choices: None,
            context_ref: ContextRef::Datapoint { id: "dp1".into() },
        }
    }

    fn ctx<'a>(gateway: &'a Gateway, dir: &Path) -> RunnerCtx<'a> {
        RunnerCtx {
            gateway,
            model: "mock-model".into(),
            trajectories_dir: dir.join("trajectories"),
            deterministic: true,
        }
    }

    #[test]
    fn single_window_is_one_call() {
        let dir = tempdir().unwrap();
        let (gateway, mock) = fixture_gateway(
            dir.path(),
            r#"{"match":{"kind":"chat"},"response":{"text":"42"}}"#,
        );
        let ctx = ctx(&gateway, dir.path());
        let q = question(Dataset::BrowseCompPlus);
        let result =
            run_full_context(&ctx, &q, "tiny context", &FullContextOptions::default()).unwrap();
        assert_eq!(result.answer_text, "42");
        assert_eq!(mock.total_calls(), 1);
        assert_eq!(result.wall_time, 0.0);
        result.validate().unwrap();
    }

    #[test]
    fn three_windows_make_four_calls_and_aggregate() {
        let dir = tempdir().unwrap();
        let (gateway, mock) = fixture_gateway(
            dir.path(),
            concat!(
                r#"{"match":{"kind":"chat","contains":"overlapping windows"},"response":{"text":"B"}},"#,
                r#"{"match":{"kind":"chat"},"response":{"text":"window answer"}}"#
            ),
        );
        let ctx = ctx(&gateway, dir.path());
        let q = question(Dataset::BrowseCompPlus);
        // 500k tokens at 1 char/token → exactly the 3-span plan.
        let context = "x".repeat(500_000);
        let options = FullContextOptions {
            chars_per_token: 1,
            ..FullContextOptions::default()
        };
        let result = run_full_context(&ctx, &q, &context, &options).unwrap();
        assert_eq!(result.answer_text, "B");
        assert_eq!(mock.total_calls(), 4);
        // Three window answers plus the aggregation, all logged.
        let events = crate::trace::parse_trajectory(&result.trajectory_path).unwrap();
        assert_eq!(events.len(), 4);
    }

    #[test]
    fn aggregation_prompt_lists_window_answers() {
        let dir = tempdir().unwrap();
        let (gateway, mock) = fixture_gateway(
            dir.path(),
            concat!(
                r#"{"match":{"kind":"chat","contains":"overlapping windows"},"response":{"text":"final"}},"#,
                r#"{"match":{"kind":"chat","contains":"which city"},"response":{"text":"per-window"}}"#
            ),
        );
        let ctx = ctx(&gateway, dir.path());
        let mut q = question(Dataset::BrowseCompPlus);
        q.text = "which city?".into();
        let context = "y".repeat(300_000);
        let options = FullContextOptions {
            chars_per_token: 1,
            ..FullContextOptions::default()
        };
        run_full_context(&ctx, &q, &context, &options).unwrap();
        let log = mock.request_log();
        let aggregation = &log[log.len() - 1];
        assert!(aggregation.contains("Window 1:"));
        assert!(aggregation.contains("Window 2:"));
        assert!(aggregation.contains("per-window"));
        assert!(aggregation.contains("which city?"));
    }

    #[test]
    fn numeric_dataset_header_repeats_in_later_windows() {
        let dir = tempdir().unwrap();
        let (gateway, mock) = fixture_gateway(
            dir.path(),
            r#"{"match":{"kind":"chat"},"response":{"text":"7"}}"#,
        );
        let ctx = ctx(&gateway, dir.path());
        let q = question(Dataset::OolongReal);
        let context = format!("TASK: count the rolls.\n\n{}", "z".repeat(400_000));
        let options = FullContextOptions {
            chars_per_token: 1,
            ..FullContextOptions::default()
        };
        run_full_context(&ctx, &q, &context, &options).unwrap();
        let log = mock.request_log();
        // Every window call except the aggregation carries the header.
        let window_calls = &log[..log.len() - 1];
        assert!(window_calls.len() > 1);
        for body in window_calls {
            assert!(body.contains("TASK: count the rolls."));
        }
    }

    #[test]
    fn corpus_sampling_respects_budget_and_seed() {
        let dir = tempdir().unwrap();
        let docs: Vec<_> = (0..50)
            .map(|i| {
                Ok(DocumentRecord {
                    id: format!("d{i:02}"),
                    title: None,
                    text: format!("document {i:02} ") + &"body ".repeat(30),
                })
            })
            .collect();
        let manifest =
            materialize_folder("sample", docs.into_iter(), &dir.path().join("corpus")).unwrap();

        let a = assemble_corpus_context(&manifest, 11, 100, 4).unwrap();
        let b = assemble_corpus_context(&manifest, 11, 100, 4).unwrap();
        let c = assemble_corpus_context(&manifest, 12, 100, 4).unwrap();
        assert_eq!(a, b, "same seed, same context");
        assert_ne!(a, c, "different seed, different sample");
        assert!(approx_tokens(&a, 4) <= 100);
        // Whole documents only: every chunk between separators is a full doc.
        for piece in a.split("\n\n") {
            assert!(piece.starts_with("document "));
        }
    }

    #[test]
    fn corpus_sampling_with_generous_budget_takes_everything() {
        let dir = tempdir().unwrap();
        let docs: Vec<_> = (0..3)
            .map(|i| {
                Ok(DocumentRecord {
                    id: format!("d{i}"),
                    title: None,
                    text: format!("short {i}"),
                })
            })
            .collect();
        let manifest =
            materialize_folder("tiny", docs.into_iter(), &dir.path().join("corpus")).unwrap();
        let context = assemble_corpus_context(&manifest, 0, 1_000_000, 4).unwrap();
        assert_eq!(context.matches("short").count(), 3);
    }
}
