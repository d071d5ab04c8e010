//! Trajectory logs and the behavioral analytics computed from them.
//!
//! Every run writes a JSON-lines trajectory: one event per shell command,
//! tool call, model message, file read, or script block. Analytics replay
//! those logs to produce command-class usage means, native-search counts,
//! exploration strategy metrics, and cost per query.
//!
//! ## Wire schema (version 1)
//!
//! ```json
//! {"v":1,"index":0,"kind":"shell_command","payload":"rg -n foo corpus/",
//!  "output_chars":512,"usage":null,"timestamp":0.0}
//! ```
//!
//! Payload conventions by kind:
//! - `shell_command`: the command line; `output_chars` = captured stdout size
//! - `tool_call`: JSON `{"name":…,"arguments":…}`; `output_chars` = result size
//! - `model_message`: the message text, with `usage` when known
//! - `file_read`: JSON `{"path":…,"start":…,"end":…}` (byte span surfaced)
//! - `script_block`: source code the agent wrote and executed

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::gateway::types::TokenUsage;

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("trajectory schema violation at line {line}: {reason}")]
    SchemaError { line: usize, reason: String },
    #[error("no trajectories supplied")]
    EmptyInput,
    #[error("cannot normalize: all values are zero")]
    AllZero,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// What a trajectory event records.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventKind {
    ShellCommand,
    ToolCall,
    ModelMessage,
    FileRead,
    ScriptBlock,
    /// Forward compatibility: unrecognized kinds survive a parse round-trip.
    Other(String),
}

impl EventKind {
    pub fn wire_name(&self) -> &str {
        match self {
            EventKind::ShellCommand => "shell_command",
            EventKind::ToolCall => "tool_call",
            EventKind::ModelMessage => "model_message",
            EventKind::FileRead => "file_read",
            EventKind::ScriptBlock => "script_block",
            EventKind::Other(name) => name,
        }
    }

    pub fn from_wire(name: &str) -> EventKind {
        match name {
            "shell_command" => EventKind::ShellCommand,
            "tool_call" => EventKind::ToolCall,
            "model_message" => EventKind::ModelMessage,
            "file_read" => EventKind::FileRead,
            "script_block" => EventKind::ScriptBlock,
            other => EventKind::Other(other.to_string()),
        }
    }
}

/// One logged step of a run.
#[derive(Debug, Clone)]
pub struct TrajectoryEvent {
    pub index: u64,
    pub kind: EventKind,
    pub payload: String,
    /// Size of output surfaced to the agent (stdout, tool result), in chars.
    pub output_chars: Option<u64>,
    pub usage: Option<TokenUsage>,
    /// Monotonic seconds since the run started.
    pub timestamp: f64,
}

#[derive(Serialize, Deserialize)]
struct WireEvent {
    v: u64,
    index: u64,
    kind: String,
    payload: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    output_chars: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    usage: Option<TokenUsage>,
    timestamp: f64,
}

/// Payload for a `file_read` event.
pub fn file_read_payload(path: &str, start: u64, end: u64) -> String {
    serde_json::json!({ "path": path, "start": start, "end": end }).to_string()
}

/// Payload for a `tool_call` event.
pub fn tool_call_payload(name: &str, arguments: &serde_json::Value) -> String {
    serde_json::json!({ "name": name, "arguments": arguments }).to_string()
}

/// Time source for event timestamps. The logical clock makes mock runs
/// byte-identical across executions.
pub enum TraceClock {
    Wall(Instant),
    Logical(u64),
}

impl TraceClock {
    fn tick(&mut self) -> f64 {
        match self {
            TraceClock::Wall(start) => start.elapsed().as_secs_f64(),
            TraceClock::Logical(next) => {
                let t = *next as f64;
                *next += 1;
                t
            }
        }
    }
}

/// Append-only trajectory log for one run; owns its file exclusively.
pub struct TrajectoryWriter {
    out: BufWriter<File>,
    path: PathBuf,
    next_index: u64,
    clock: TraceClock,
}

impl TrajectoryWriter {
    pub fn create(path: &Path, clock: TraceClock) -> Result<Self, TraceError> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        Ok(TrajectoryWriter {
            out: BufWriter::new(File::create(path)?),
            path: path.to_path_buf(),
            next_index: 0,
            clock,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn record(
        &mut self,
        kind: EventKind,
        payload: impl Into<String>,
        output_chars: Option<u64>,
        usage: Option<TokenUsage>,
    ) -> Result<(), TraceError> {
        let payload = payload.into();
        if kind == EventKind::ShellCommand && payload.is_empty() {
            return Err(TraceError::SchemaError {
                line: self.next_index as usize + 1,
                reason: "shell_command payload must be non-empty".into(),
            });
        }
        let event = WireEvent {
            v: SCHEMA_VERSION,
            index: self.next_index,
            kind: kind.wire_name().to_string(),
            payload,
            output_chars,
            usage,
            timestamp: self.clock.tick(),
        };
        serde_json::to_writer(&mut self.out, &event)
            .map_err(|e| TraceError::Io(std::io::Error::new(std::io::ErrorKind::Other, e)))?;
        self.out.write_all(b"\n")?;
        self.next_index += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), TraceError> {
        self.out.flush()?;
        Ok(())
    }
}

/// Read a trajectory file back into events, enforcing the ordering invariant.
pub fn parse_trajectory(path: &Path) -> Result<Vec<TrajectoryEvent>, TraceError> {
    let file = File::open(path)?;
    let mut events = Vec::new();
    let mut last_index: Option<u64> = None;
    for (line_no, line) in BufReader::new(file).lines().enumerate() {
        let line_no = line_no + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let wire: WireEvent =
            serde_json::from_str(&line).map_err(|e| TraceError::SchemaError {
                line: line_no,
                reason: e.to_string(),
            })?;
        if wire.v > SCHEMA_VERSION {
            log::warn!("trajectory {}: schema v{} is newer than v{SCHEMA_VERSION}", path.display(), wire.v);
        }
        if let Some(last) = last_index {
            if wire.index <= last {
                return Err(TraceError::SchemaError {
                    line: line_no,
                    reason: format!("index {} not greater than previous {last}", wire.index),
                });
            }
        }
        last_index = Some(wire.index);
        let kind = EventKind::from_wire(&wire.kind);
        if matches!(kind, EventKind::Other(_)) {
            log::warn!("trajectory {}: unknown event kind {:?} kept as-is", path.display(), wire.kind);
        }
        events.push(TrajectoryEvent {
            index: wire.index,
            kind,
            payload: wire.payload,
            output_chars: wire.output_chars,
            usage: wire.usage,
            timestamp: wire.timestamp,
        });
    }
    Ok(events)
}

/// Sum of per-event usage; the conservation invariant checks this equals the
/// run's reported total.
pub fn trajectory_usage(events: &[TrajectoryEvent]) -> TokenUsage {
    let mut total = TokenUsage::default();
    for e in events {
        if let Some(u) = e.usage {
            total.add(u);
        }
    }
    total
}

// ------------------------------------------------------------- classification

/// Behavioral class of a shell command. Ordered by classification priority:
/// when a pipeline mixes classes, the smallest (highest-priority) wins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandClass {
    RetrieverTool,
    Search,
    Extract,
    Index,
    Script,
    Other,
}

impl CommandClass {
    pub const ALL: [CommandClass; 6] = [
        CommandClass::RetrieverTool,
        CommandClass::Search,
        CommandClass::Extract,
        CommandClass::Index,
        CommandClass::Script,
        CommandClass::Other,
    ];

    /// Column label used in usage tables.
    pub fn label(&self) -> &'static str {
        match self {
            CommandClass::Search => "Search (rg)",
            CommandClass::Extract => "Extract (sed)",
            CommandClass::Index => "Index (nl)",
            CommandClass::RetrieverTool => "Retriever Tool",
            CommandClass::Script => "Script",
            CommandClass::Other => "Other",
        }
    }
}

const SEARCH_CMDS: &[&str] = &["grep", "rg", "ripgrep", "find", "ack", "fgrep", "egrep"];
const EXTRACT_CMDS: &[&str] = &["sed", "awk", "cut", "head", "tail"];
const INDEX_CMDS: &[&str] = &["nl", "wc"];
const INTERPRETERS: &[&str] = &[
    "python", "python2", "python3", "node", "ruby", "perl", "bash", "sh", "zsh",
];

fn basename(token: &str) -> &str {
    token.rsplit('/').next().unwrap_or(token)
}

fn looks_like_env_assignment(token: &str) -> bool {
    match token.split_once('=') {
        Some((name, _)) => {
            !name.is_empty()
                && name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_')
                && !name.chars().next().unwrap().is_ascii_digit()
        }
        None => false,
    }
}

fn classify_segment(segment: &str) -> CommandClass {
    let mut tokens = segment.split_whitespace().peekable();
    // Skip VAR=value prefixes before the actual command.
    while let Some(tok) = tokens.peek() {
        if looks_like_env_assignment(tok) {
            tokens.next();
        } else {
            break;
        }
    }
    let Some(cmd_token) = tokens.next() else {
        return CommandClass::Other;
    };
    let cmd = basename(cmd_token);
    let args: Vec<&str> = tokens.collect();

    // The retriever shim/CLI outranks everything: either invoked directly or
    // as a file handed to an interpreter.
    if cmd == "retriever" || cmd == "retriever.py" {
        return CommandClass::RetrieverTool;
    }
    if args.iter().any(|a| basename(a) == "retriever.py") {
        return CommandClass::RetrieverTool;
    }
    if SEARCH_CMDS.contains(&cmd) {
        return CommandClass::Search;
    }
    if EXTRACT_CMDS.contains(&cmd) {
        return CommandClass::Extract;
    }
    if INDEX_CMDS.contains(&cmd) {
        return CommandClass::Index;
    }
    if INTERPRETERS.contains(&cmd) && args.iter().any(|a| !a.starts_with('-')) {
        return CommandClass::Script;
    }
    // Direct execution of a script file: ./analyze.py, ./run.sh …
    if cmd.ends_with(".py") || cmd.ends_with(".sh") || cmd.ends_with(".js") || cmd.ends_with(".rb")
    {
        return CommandClass::Script;
    }
    CommandClass::Other
}

/// Classify a full command line. Pipelines and command lists are split on
/// `|`, `;`, and `&&`; every segment is classified and the highest-priority
/// class wins, so `rg x | head` counts as Search, not Extract.
pub fn classify_command(cmdline: &str) -> CommandClass {
    cmdline
        .split(['|', ';'])
        .flat_map(|part| part.split("&&"))
        .map(classify_segment)
        .min() // CommandClass ordering = priority
        .unwrap_or(CommandClass::Other)
}

// ----------------------------------------------------------------- analytics

/// Mean count of each command class per trajectory.
pub fn command_usage_stats(
    trajectories: &[Vec<TrajectoryEvent>],
) -> Result<BTreeMap<CommandClass, f64>, TraceError> {
    if trajectories.is_empty() {
        return Err(TraceError::EmptyInput);
    }
    let mut totals: BTreeMap<CommandClass, f64> = CommandClass::ALL
        .iter()
        .map(|c| (*c, 0.0))
        .collect();
    for events in trajectories {
        for event in events {
            if event.kind == EventKind::ShellCommand {
                *totals.get_mut(&classify_command(&event.payload)).unwrap() += 1.0;
            }
        }
    }
    let n = trajectories.len() as f64;
    for v in totals.values_mut() {
        *v /= n;
    }
    Ok(totals)
}

/// Percentage change from `baseline` to `variant`, as printed in comparison
/// tables: `(variant − baseline)/baseline · 100`.
pub fn percent_diff(baseline: f64, variant: f64) -> f64 {
    (variant - baseline) / baseline * 100.0
}

/// Search commands that do not involve the provided retriever.
pub fn native_search_count(events: &[TrajectoryEvent]) -> usize {
    events
        .iter()
        .filter(|e| e.kind == EventKind::ShellCommand)
        .filter(|e| classify_command(&e.payload) == CommandClass::Search)
        .count()
}

/// Exploration metrics averaged over trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyStats {
    /// Mean native search commands per query.
    pub search_intensity: f64,
    /// Mean tokens read per query (file spans + extract output).
    pub read_volume: f64,
    /// Mean function definitions written per query.
    pub code_volume: f64,
}

/// Knobs for [`strategy_stats`].
#[derive(Debug, Clone, Copy)]
pub struct StrategyOptions {
    /// Count retriever output (retriever commands, tool-call results) toward
    /// read volume. Off by default: read volume measures what the agent reads
    /// through its own navigation.
    pub include_retriever_output: bool,
    /// Token approximation for read volume.
    pub chars_per_token: f64,
}

impl Default for StrategyOptions {
    fn default() -> Self {
        StrategyOptions {
            include_retriever_output: false,
            chars_per_token: 4.0,
        }
    }
}

fn function_def_re() -> &'static regex::Regex {
    static RE: std::sync::OnceLock<regex::Regex> = std::sync::OnceLock::new();
    // Line-anchored `def name(`: counts function definitions in the scripts
    // agents write (agent scripts are Python in practice).
    RE.get_or_init(|| regex::Regex::new(r"(?m)^\s*def\s+\w+\s*\(").unwrap())
}

#[derive(Debug, Deserialize)]
struct FileReadPayload {
    #[allow(dead_code)]
    path: String,
    start: u64,
    end: u64,
}

/// Compute search intensity, read volume, and code volume over trajectories.
/// An empty input yields all zeros.
pub fn strategy_stats(
    trajectories: &[Vec<TrajectoryEvent>],
    options: StrategyOptions,
) -> StrategyStats {
    if trajectories.is_empty() {
        return StrategyStats {
            search_intensity: 0.0,
            read_volume: 0.0,
            code_volume: 0.0,
        };
    }
    let mut search_total = 0.0;
    let mut read_chars_total = 0.0;
    let mut code_total = 0.0;
    for events in trajectories {
        search_total += native_search_count(events) as f64;
        for event in events {
            match &event.kind {
                EventKind::FileRead => {
                    let chars = event.output_chars.or_else(|| {
                        serde_json::from_str::<FileReadPayload>(&event.payload)
                            .ok()
                            .map(|p| p.end.saturating_sub(p.start))
                    });
                    read_chars_total += chars.unwrap_or(0) as f64;
                }
                EventKind::ShellCommand => {
                    let class = classify_command(&event.payload);
                    let counts = class == CommandClass::Extract
                        || (options.include_retriever_output
                            && class == CommandClass::RetrieverTool);
                    if counts {
                        read_chars_total += event.output_chars.unwrap_or(0) as f64;
                    }
                }
                EventKind::ToolCall if options.include_retriever_output => {
                    read_chars_total += event.output_chars.unwrap_or(0) as f64;
                }
                EventKind::ScriptBlock => {
                    code_total += function_def_re().find_iter(&event.payload).count() as f64;
                }
                _ => {}
            }
        }
    }
    let n = trajectories.len() as f64;
    StrategyStats {
        search_intensity: search_total / n,
        read_volume: read_chars_total / options.chars_per_token / n,
        code_volume: code_total / n,
    }
}

/// Scale per-dataset values so they sum to 1 (within 1e-9), preserving order.
pub fn normalize_across_datasets(
    values: &BTreeMap<String, f64>,
) -> Result<BTreeMap<String, f64>, TraceError> {
    debug_assert!(values.values().all(|v| *v >= 0.0));
    let sum: f64 = values.values().sum();
    if sum <= 0.0 {
        return Err(TraceError::AllZero);
    }
    Ok(values.iter().map(|(k, v)| (k.clone(), v / sum)).collect())
}

/// Mean dollar cost per query, grouped by method.
pub fn cost_per_query(
    results: &[crate::runners::RunResult],
    prices: &crate::gateway::PriceTable,
) -> Result<BTreeMap<String, f64>, crate::gateway::GatewayError> {
    let mut sums: BTreeMap<String, (f64, u64)> = BTreeMap::new();
    for r in results {
        let usd = crate::gateway::cost(&r.usage, &r.model, prices)?;
        let entry = sums.entry(r.method.clone()).or_insert((0.0, 0));
        entry.0 += usd;
        entry.1 += 1;
    }
    Ok(sums
        .into_iter()
        .map(|(method, (total, n))| (method, total / n as f64))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn event(kind: EventKind, payload: &str) -> TrajectoryEvent {
        TrajectoryEvent {
            index: 0,
            kind,
            payload: payload.to_string(),
            output_chars: None,
            usage: None,
            timestamp: 0.0,
        }
    }

    #[test]
    fn writer_reader_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        let mut w = TrajectoryWriter::create(&path, TraceClock::Logical(0)).unwrap();
        w.record(EventKind::ShellCommand, "rg foo corpus/", Some(128), None)
            .unwrap();
        w.record(
            EventKind::ModelMessage,
            "the answer",
            None,
            Some(TokenUsage::new(10, 5)),
        )
        .unwrap();
        w.finish().unwrap();
        let events = parse_trajectory(&path).unwrap();
        assert_eq!(events.len(), 2);
        assert_eq!(events[0].index, 0);
        assert_eq!(events[0].kind, EventKind::ShellCommand);
        assert_eq!(events[0].output_chars, Some(128));
        assert_eq!(events[1].usage, Some(TokenUsage::new(10, 5)));
        assert_eq!((events[0].timestamp, events[1].timestamp), (0.0, 1.0));
        assert_eq!(trajectory_usage(&events), TokenUsage::new(10, 5));
    }

    #[test]
    fn empty_file_parses_to_nothing() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        std::fs::write(&path, "").unwrap();
        assert!(parse_trajectory(&path).unwrap().is_empty());
    }

    #[test]
    fn out_of_order_indexes_are_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(
            &path,
            concat!(
                r#"{"v":1,"index":1,"kind":"model_message","payload":"a","timestamp":0.0}"#,
                "\n",
                r#"{"v":1,"index":0,"kind":"model_message","payload":"b","timestamp":1.0}"#,
                "\n"
            ),
        )
        .unwrap();
        let err = parse_trajectory(&path).unwrap_err();
        assert!(matches!(err, TraceError::SchemaError { line: 2, .. }));
    }

    #[test]
    fn unknown_kinds_survive() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("fwd.jsonl");
        std::fs::write(
            &path,
            r#"{"v":1,"index":0,"kind":"screenshot","payload":"x","timestamp":0.0}"#,
        )
        .unwrap();
        let events = parse_trajectory(&path).unwrap();
        assert_eq!(events[0].kind, EventKind::Other("screenshot".into()));
    }

    #[test]
    fn empty_shell_command_is_rejected_at_write() {
        let dir = tempdir().unwrap();
        let mut w =
            TrajectoryWriter::create(&dir.path().join("t.jsonl"), TraceClock::Logical(0)).unwrap();
        assert!(w.record(EventKind::ShellCommand, "", None, None).is_err());
    }

    #[test]
    fn classification_of_trace_commands() {
        assert_eq!(classify_command(r#"rg -n "Riot Games" corpus/"#), CommandClass::Search);
        assert_eq!(classify_command("sed -n '1,180p' 81813.txt"), CommandClass::Extract);
        assert_eq!(
            classify_command("python3 retriever.py --dataset browsecomp-plus --embedding-model BM25 --top-k 5 --query \"riot games\""),
            CommandClass::RetrieverTool
        );
        assert_eq!(classify_command("nl big.txt"), CommandClass::Index);
        assert_eq!(classify_command("wc -l corpus.jsonl"), CommandClass::Index);
        assert_eq!(classify_command("python3 analyze.py"), CommandClass::Script);
        assert_eq!(classify_command("./analyze.py --fast"), CommandClass::Script);
        assert_eq!(classify_command("ls -la"), CommandClass::Other);
        assert_eq!(classify_command("cat notes.txt"), CommandClass::Other);
    }

    #[test]
    fn pipelines_take_highest_priority_class() {
        assert_eq!(classify_command("rg x | head -5"), CommandClass::Search);
        assert_eq!(classify_command("cat f.txt | wc -l"), CommandClass::Index);
        assert_eq!(
            classify_command("grep foo a.txt && python3 retriever.py --query foo"),
            CommandClass::RetrieverTool
        );
        assert_eq!(classify_command("cd /tmp; ls"), CommandClass::Other);
    }

    #[test]
    fn env_prefixes_are_skipped() {
        assert_eq!(
            classify_command("LC_ALL=C rg -c pattern file.txt"),
            CommandClass::Search
        );
        assert_eq!(
            classify_command("PYTHONPATH=. python3 tally.py"),
            CommandClass::Script
        );
    }

    #[test]
    fn full_paths_classify_by_basename() {
        assert_eq!(classify_command("/usr/bin/rg foo"), CommandClass::Search);
        assert_eq!(
            classify_command("/usr/bin/env python3 /ws/retriever.py --query x"),
            CommandClass::RetrieverTool
        );
    }

    #[test]
    fn classification_is_total() {
        for cmd in ["", "   ", "|||", "&& &&", "unknown-binary --flag"] {
            let _ = classify_command(cmd); // must not panic
        }
        assert_eq!(classify_command(""), CommandClass::Other);
    }

    #[test]
    fn usage_stats_mean_per_trajectory() {
        let t1: Vec<TrajectoryEvent> = (0..3)
            .map(|_| event(EventKind::ShellCommand, "rg x"))
            .collect();
        let t2: Vec<TrajectoryEvent> = (0..5)
            .map(|_| event(EventKind::ShellCommand, "grep y f"))
            .collect();
        let stats = command_usage_stats(&[t1, t2]).unwrap();
        assert_eq!(stats[&CommandClass::Search], 4.0);
        assert_eq!(stats[&CommandClass::Extract], 0.0);
        assert!(matches!(
            command_usage_stats(&[]),
            Err(TraceError::EmptyInput)
        ));
    }

    #[test]
    fn percent_diff_reproduces_reported_deltas() {
        assert!((percent_diff(31.05, 18.46) - -40.547).abs() < 0.1);
        assert!((percent_diff(0.61, 4.48) - 634.4).abs() < 0.1);
        assert!((percent_diff(0.69, 1.22) - 76.8).abs() < 0.1);
    }

    #[test]
    fn native_search_excludes_retriever() {
        let events = vec![
            event(EventKind::ShellCommand, "grep a f"),
            event(EventKind::ShellCommand, "rg b"),
            event(EventKind::ShellCommand, "rg c"),
            event(EventKind::ShellCommand, "grep d f"),
            event(EventKind::ShellCommand, "python3 retriever.py --query x"),
            event(EventKind::ShellCommand, "python3 retriever.py --query y"),
        ];
        assert_eq!(native_search_count(&events), 4);
    }

    #[test]
    fn read_volume_counts_spans_at_four_chars_per_token() {
        let mut fr = event(EventKind::FileRead, &file_read_payload("doc.txt", 100, 500));
        fr.output_chars = None;
        let stats = strategy_stats(&[vec![fr]], StrategyOptions::default());
        assert_eq!(stats.read_volume, 100.0, "400 chars / 4");
    }

    #[test]
    fn read_volume_includes_extract_output_and_optionally_retriever() {
        let mut sed = event(EventKind::ShellCommand, "sed -n '1,10p' f.txt");
        sed.output_chars = Some(400);
        let mut ret = event(EventKind::ShellCommand, "python3 retriever.py --query x");
        ret.output_chars = Some(4000);
        let events = vec![sed, ret];
        let default = strategy_stats(std::slice::from_ref(&events), StrategyOptions::default());
        assert_eq!(default.read_volume, 100.0, "retriever output excluded");
        let with_ret = strategy_stats(
            &[events],
            StrategyOptions {
                include_retriever_output: true,
                ..StrategyOptions::default()
            },
        );
        assert_eq!(with_ret.read_volume, 1100.0);
    }

    #[test]
    fn code_volume_counts_function_definitions() {
        let script = "import re\n\ndef count_rolls(text):\n    pass\n\ndef main():\n    pass\n\nx = 'def not_a_def('\n";
        let stats = strategy_stats(
            &[vec![event(EventKind::ScriptBlock, script)]],
            StrategyOptions::default(),
        );
        assert_eq!(stats.code_volume, 2.0);
    }

    #[test]
    fn strategy_stats_empty_is_zero() {
        let stats = strategy_stats(&[], StrategyOptions::default());
        assert_eq!(stats.search_intensity, 0.0);
        assert_eq!(stats.read_volume, 0.0);
        assert_eq!(stats.code_volume, 0.0);
    }

    #[test]
    fn normalization_sums_to_one() {
        let mut values = BTreeMap::new();
        values.insert("a".to_string(), 2.0);
        values.insert("b".to_string(), 3.0);
        values.insert("c".to_string(), 5.0);
        let out = normalize_across_datasets(&values).unwrap();
        assert!((out["a"] - 0.2).abs() < 1e-12);
        assert!((out["b"] - 0.3).abs() < 1e-12);
        assert!((out["c"] - 0.5).abs() < 1e-12);
        let sum: f64 = out.values().sum();
        assert!((sum - 1.0).abs() < 1e-9);

        let mut single = BTreeMap::new();
        single.insert("x".to_string(), 7.0);
        assert_eq!(normalize_across_datasets(&single).unwrap()["x"], 1.0);

        let mut zeros = BTreeMap::new();
        zeros.insert("x".to_string(), 0.0);
        assert!(matches!(
            normalize_across_datasets(&zeros),
            Err(TraceError::AllZero)
        ));
    }

    fn run_result(method: &str, model: &str, prompt: u64, completion: u64) -> crate::runners::RunResult {
        crate::runners::RunResult {
            question_id: "q".into(),
            method: method.into(),
            model: model.into(),
            answer_text: String::new(),
            trajectory_path: std::path::PathBuf::new(),
            usage: TokenUsage::new(prompt, completion),
            wall_time: 0.0,
            flags: Vec::new(),
        }
    }

    #[test]
    fn cost_per_query_averages_by_method() {
        let mut prices = crate::gateway::PriceTable::default();
        prices.models.insert(
            "m".into(),
            crate::gateway::ModelPrice {
                usd_per_million_prompt_tokens: 1.0,
                usd_per_million_completion_tokens: 1.0,
            },
        );
        // $0.10 and $0.30 → mean $0.20.
        let results = vec![
            run_result("react", "m", 50_000, 50_000),
            run_result("react", "m", 150_000, 150_000),
            run_result("rag", "m", 0, 0),
        ];
        let costs = cost_per_query(&results, &prices).unwrap();
        assert!((costs["react"] - 0.20).abs() < 1e-12);
        assert_eq!(costs["rag"], 0.0);

        let unpriced = vec![run_result("rag", "mystery", 10, 10)];
        let err = cost_per_query(&unpriced, &prices).unwrap_err();
        assert!(
            matches!(err, crate::gateway::GatewayError::UnknownModel(ref m) if m == "mystery"),
            "{err}"
        );
    }
}
