//! Coding-agent runner: hand the question to an external agent process that
//! works inside an isolated workspace directory.
//!
//! The workspace contains the corpus (symlinked, treated as read-only), plus
//! — when a retriever is configured — a `retriever.py` launcher shim and the
//! dataset registry the retriever CLI resolves against. The prompt carries
//! only paths, never corpus content. The agent reports its session as
//! JSON-lines on stdout (see [`TranscriptLine`]), which is captured into the
//! trajectory log; the answer is the text of its final message.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::Deserialize;

use crate::corpus::{sanitize_filename, CorpusManifest};
use crate::gateway::types::TokenUsage;
use crate::prompts::{coding_template_id, render_prompt};
use crate::retriever::registry::{DatasetEntry, DatasetKind, Registry, REGISTRY_FILENAME};
use crate::retriever::{corpus_index_path, RetrieverError, RetrieverKind};
use crate::trace::{file_read_payload, tool_call_payload, EventKind, TrajectoryWriter};
use crate::types::{ContextRef, Dataset, Method, Question};

use super::{question_vars, RunResult, RunnerCtx, RunnerError};

pub const DEFAULT_AGENT_TIMEOUT: Duration = Duration::from_secs(120);

/// Launcher shim placed in retriever-enabled workspaces so agents can run
/// `python retriever.py …` exactly as the prompt shows. It delegates to the
/// retriever CLI named by `FSNAV_RETRIEVER_BIN` (default: `retriever` on
/// PATH).
pub const SHIM_SOURCE: &str = r#"import os, subprocess, sys
raise SystemExit(subprocess.call([os.environ.get("FSNAV_RETRIEVER_BIN", "retriever"), *sys.argv[1:]]))
"#;

/// How to launch and supervise the external agent.
#[derive(Debug, Clone)]
pub struct AgentConfig {
    /// Argv template; `{workspace}` and `{prompt_file}` are substituted in
    /// every element. The prompt is also piped to the agent's stdin.
    pub command: Vec<String>,
    pub retriever: Option<RetrieverKind>,
    /// Label substituted for `{embedding_model}` in retriever prompts;
    /// defaults to `BM25` / the dense model tag.
    pub embedding_model_label: Option<String>,
    pub timeout: Duration,
    /// Parent directory for per-question workspaces.
    pub workspace_root: PathBuf,
    pub keep_workspace: bool,
    /// Retriever CLI path exported as `FSNAV_RETRIEVER_BIN` for the shim.
    pub retriever_bin: Option<PathBuf>,
    /// Extra environment for the agent process (e.g. mock fixture paths).
    pub env: Vec<(String, String)>,
}

impl AgentConfig {
    pub fn new(command: Vec<String>, workspace_root: impl Into<PathBuf>) -> Self {
        AgentConfig {
            command,
            retriever: None,
            embedding_model_label: None,
            timeout: DEFAULT_AGENT_TIMEOUT,
            workspace_root: workspace_root.into(),
            keep_workspace: false,
            retriever_bin: None,
            env: Vec::new(),
        }
    }

    fn embedding_label(&self) -> String {
        if let Some(label) = &self.embedding_model_label {
            return label.clone();
        }
        match &self.retriever {
            Some(RetrieverKind::Bm25) | None => "BM25".to_string(),
            Some(RetrieverKind::Dense(tag)) => tag.clone(),
        }
    }
}

/// A prepared per-question workspace.
#[derive(Debug)]
pub struct WorkspaceInfo {
    pub dir: PathBuf,
    /// Corpus path as shown to the agent, relative to the workspace.
    pub context_location: String,
    pub datapoint_id: Option<String>,
}

/// Build a fresh workspace for one question: corpus symlink, and — iff a
/// retriever is configured — the launcher shim and dataset registry.
pub fn prepare_workspace(
    q: &Question,
    manifest: &CorpusManifest,
    config: &AgentConfig,
) -> Result<WorkspaceInfo, RunnerError> {
    let dir = config.workspace_root.join(sanitize_filename(&q.id));
    if dir.exists() {
        std::fs::remove_dir_all(&dir)?;
    }
    std::fs::create_dir_all(&dir)?;

    let corpus_root = std::fs::canonicalize(&manifest.root)?;
    let (link_name, datapoint_id) = match &q.context_ref {
        ContextRef::Corpus => {
            let name = corpus_root
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .ok_or_else(|| RunnerError::ConfigError("corpus root has no name".into()))?;
            std::os::unix::fs::symlink(&corpus_root, dir.join(&name))?;
            (name, None)
        }
        ContextRef::Datapoint { id } => {
            let file_name = format!("{}.txt", sanitize_filename(id));
            let target = corpus_root.join(&file_name);
            if !target.exists() {
                return Err(RunnerError::Retriever(RetrieverError::UnknownDatapoint(
                    id.clone(),
                )));
            }
            std::os::unix::fs::symlink(&target, dir.join(&file_name))?;
            (file_name, Some(id.clone()))
        }
    };

    if let Some(kind) = &config.retriever {
        // Document-level indexes must exist up front; chunk-level indexes are
        // small and build lazily inside the retriever CLI.
        if q.dataset.is_corpus() && !corpus_index_path(manifest, kind).exists() {
            return Err(RunnerError::ConfigError(format!(
                "no {} index for corpus {}; build it with the index command first",
                kind.tag(),
                manifest.name
            )));
        }
        std::fs::write(dir.join("retriever.py"), SHIM_SOURCE)?;
        let mut registry = Registry::default();
        registry.datasets.insert(
            q.dataset.id().to_string(),
            DatasetEntry {
                kind: if q.dataset.is_corpus() {
                    DatasetKind::Corpus
                } else {
                    DatasetKind::LongDoc
                },
                root: corpus_root,
            },
        );
        registry.save(&dir.join(REGISTRY_FILENAME))?;
    }

    Ok(WorkspaceInfo {
        dir,
        context_location: link_name,
        datapoint_id,
    })
}

/// Render the agent prompt for a prepared workspace. The prompt references
/// the corpus only by path.
pub fn build_agent_prompt(
    q: &Question,
    info: &WorkspaceInfo,
    config: &AgentConfig,
) -> Result<String, RunnerError> {
    let mut vars = question_vars(q);
    vars.insert("context_location".to_string(), info.context_location.clone());
    vars.insert("embedding_model".to_string(), config.embedding_label());
    if let Some(dp) = &info.datapoint_id {
        match q.dataset {
            Dataset::LongBench => {
                vars.insert("LongBench_datapoint_id".to_string(), dp.clone());
            }
            Dataset::OolongReal | Dataset::OolongSynthetic => {
                vars.insert("oolong_datapoint_id".to_string(), dp.clone());
            }
            _ => {}
        }
    }
    Ok(render_prompt(
        &coding_template_id(q.dataset, config.retriever.is_some()),
        &vars,
    )?)
}

/// One line of the agent's stdout transcript.
#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum TranscriptLine {
    /// A shell command the agent ran; `output_chars` = captured stdout size.
    Shell {
        command: String,
        #[serde(default)]
        output_chars: Option<u64>,
    },
    /// A byte span of a file the agent read directly.
    FileRead { path: String, start: u64, end: u64 },
    /// Source code the agent wrote and executed.
    Script { source: String },
    /// A structured tool invocation.
    Tool {
        name: String,
        #[serde(default)]
        args: serde_json::Value,
        #[serde(default)]
        output_chars: Option<u64>,
    },
    /// A model message; the last one carries the answer.
    Message {
        text: String,
        #[serde(default)]
        usage: Option<TokenUsage>,
    },
}

fn record_transcript(
    writer: &mut TrajectoryWriter,
    stdout: &str,
) -> Result<(TokenUsage, Option<String>), RunnerError> {
    let mut usage = TokenUsage::default();
    let mut final_message: Option<String> = None;
    for line in stdout.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match serde_json::from_str::<TranscriptLine>(line) {
            Ok(TranscriptLine::Shell {
                command,
                output_chars,
            }) => writer.record(EventKind::ShellCommand, command, output_chars, None)?,
            Ok(TranscriptLine::FileRead { path, start, end }) => writer.record(
                EventKind::FileRead,
                file_read_payload(&path, start, end),
                Some(end.saturating_sub(start)),
                None,
            )?,
            Ok(TranscriptLine::Script { source }) => {
                writer.record(EventKind::ScriptBlock, source, None, None)?
            }
            Ok(TranscriptLine::Tool {
                name,
                args,
                output_chars,
            }) => writer.record(
                EventKind::ToolCall,
                tool_call_payload(&name, &args),
                output_chars,
                None,
            )?,
            Ok(TranscriptLine::Message { text, usage: u }) => {
                if let Some(u) = u {
                    usage.add(u);
                }
                writer.record(
                    EventKind::ModelMessage,
                    text.clone(),
                    Some(text.len() as u64),
                    u,
                )?;
                final_message = Some(text);
            }
            Err(e) => {
                log::warn!("ignoring non-transcript agent output line: {e}: {line}");
            }
        }
    }
    Ok((usage, final_message))
}

/// Agents commonly label their final line; accept `Answer: X` as `X`.
fn extract_answer(message: &str) -> String {
    let trimmed = message.trim();
    let lower = trimmed.to_lowercase();
    if let Some(rest) = lower.strip_prefix("answer:") {
        let offset = trimmed.len() - rest.len();
        return trimmed[offset..].trim().to_string();
    }
    trimmed.to_string()
}

/// The agent runs with the workspace as its working directory, so every path
/// handed across the process boundary (argv substitutions, environment
/// variables) must be absolute — a caller-relative path would be resolved
/// against the workspace instead.
fn absolutize(path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        std::env::current_dir()
            .map(|cwd| cwd.join(path))
            .unwrap_or_else(|_| path.to_path_buf())
    }
}

fn substitute_argv(template: &[String], workspace: &Path, prompt_file: &Path) -> Vec<String> {
    template
        .iter()
        .map(|arg| {
            arg.replace("{workspace}", &workspace.to_string_lossy())
                .replace("{prompt_file}", &prompt_file.to_string_lossy())
        })
        .collect()
}

/// Run the external agent on one question and capture its session.
pub fn run_coding_agent(
    ctx: &RunnerCtx,
    q: &Question,
    manifest: &CorpusManifest,
    config: &AgentConfig,
) -> Result<RunResult, RunnerError> {
    if config.command.is_empty() {
        return Err(RunnerError::ConfigError(
            "coding agent requires a non-empty agent command".into(),
        ));
    }
    let started = Instant::now();
    let info = prepare_workspace(q, manifest, config)?;
    let prompt = build_agent_prompt(q, &info, config)?;
    let prompt_file = config
        .workspace_root
        .join(format!("{}.prompt.txt", sanitize_filename(&q.id)));
    std::fs::write(&prompt_file, &prompt)?;

    let result = drive_agent(ctx, q, config, &info, &prompt, &prompt_file, started);

    if !config.keep_workspace {
        let _ = std::fs::remove_dir_all(&info.dir);
        let _ = std::fs::remove_file(&prompt_file);
    }
    result
}

#[allow(clippy::too_many_arguments)]
fn drive_agent(
    ctx: &RunnerCtx,
    q: &Question,
    config: &AgentConfig,
    info: &WorkspaceInfo,
    prompt: &str,
    prompt_file: &Path,
    started: Instant,
) -> Result<RunResult, RunnerError> {
    let workspace = absolutize(&info.dir);
    let argv = substitute_argv(&config.command, &workspace, &absolutize(prompt_file));
    // A bare program name goes through PATH lookup; an explicit relative
    // path would resolve against the workspace, so anchor it here instead.
    let program = if Path::new(&argv[0]).components().count() > 1 {
        absolutize(Path::new(&argv[0])).into_os_string()
    } else {
        std::ffi::OsString::from(&argv[0])
    };
    let mut command = Command::new(&program);
    command
        .args(&argv[1..])
        .current_dir(&workspace)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    if let Some(bin) = &config.retriever_bin {
        command.env("FSNAV_RETRIEVER_BIN", absolutize(bin));
    }
    if config.retriever.is_some() {
        command.env(
            crate::retriever::registry::REGISTRY_ENV,
            workspace.join(REGISTRY_FILENAME),
        );
    }
    for (k, v) in &config.env {
        command.env(k, v);
    }
    let mut child = command
        .spawn()
        .map_err(|e| RunnerError::AgentSpawnError(format!("{}: {e}", argv[0])))?;

    // Feed the prompt and close stdin; an agent that never reads it is fine.
    if let Some(mut stdin) = child.stdin.take() {
        let _ = stdin.write_all(prompt.as_bytes());
    }
    let stdout_pipe = child.stdout.take().expect("stdout piped");
    let stderr_pipe = child.stderr.take().expect("stderr piped");
    let stdout_thread = std::thread::spawn(move || {
        let mut buf = String::new();
        let _ = std::io::Read::read_to_string(&mut { stdout_pipe }, &mut buf);
        buf
    });
    let stderr_thread = std::thread::spawn(move || {
        let mut buf = String::new();
        let _ = std::io::Read::read_to_string(&mut { stderr_pipe }, &mut buf);
        buf
    });

    let deadline = Instant::now() + config.timeout;
    let status = loop {
        if let Some(status) = child.try_wait()? {
            break status;
        }
        if Instant::now() > deadline {
            let _ = child.kill();
            let _ = child.wait();
            return Err(RunnerError::AgentTimeout(config.timeout));
        }
        std::thread::sleep(Duration::from_millis(10));
    };
    let stdout = stdout_thread.join().unwrap_or_default();
    let stderr = stderr_thread.join().unwrap_or_default();

    let mut writer = ctx.writer(&q.id)?;
    let (usage, final_message) = record_transcript(&mut writer, &stdout)?;
    let trajectory_path = writer.path().to_path_buf();
    writer.finish()?;

    let mut flags = Vec::new();
    if !status.success() {
        log::warn!(
            "agent exited with {status} for question {}; stderr: {}",
            q.id,
            stderr.trim()
        );
        flags.push(match status.code() {
            Some(code) => format!("agent-exit-{code}"),
            None => "agent-exit-signal".to_string(),
        });
    }
    let answer_text = match final_message {
        Some(text) if !text.trim().is_empty() => extract_answer(&text),
        _ => return Err(RunnerError::AnswerExtractionFailure),
    };

    Ok(RunResult {
        question_id: q.id.clone(),
        method: Method::CodingAgent.id().to_string(),
        model: ctx.model.clone(),
        answer_text,
        trajectory_path,
        usage,
        wall_time: ctx.elapsed(started),
        flags,
    })
}
