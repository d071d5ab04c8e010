//! Subcommand implementations: ingest, index, run, eval, analyze, report.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use anyhow::Context as _;
use fsnav_core::corpus::{self, CorpusManifest, DEFAULT_WORDS_PER_CHUNK};
use fsnav_core::eval::{sample_benchmark, score_question, EvalOutcome, SampleFile};
use fsnav_core::gateway::{
    cost, Gateway, GatewayEmbedder, GatewaySettings, PriceTable,
};
use fsnav_core::report::{
    command_usage_table, cost_table, main_results_table, native_search_table,
    strategy_figure_table,
};
use fsnav_core::retriever::dense::Embedder;
use fsnav_core::retriever::{
    corpus_index_path, ensure_chunk_bm25, ensure_chunk_dense, ensure_corpus_bm25,
    ensure_corpus_dense, open_chunk_retriever, open_corpus_retriever, Retriever, RetrieverKind,
};
use fsnav_core::runners::coding_agent::{run_coding_agent, AgentConfig};
use fsnav_core::runners::full_context::{
    assemble_corpus_context, run_full_context, FullContextOptions,
};
use fsnav_core::runners::rag::{run_rag, RAG_TOP_K};
use fsnav_core::runners::react::run_react;
use fsnav_core::runners::{
    question_seed, read_datapoint_text, RunResult, RunnerCtx, RunnerError,
    DEFAULT_CHARS_PER_TOKEN,
};
use fsnav_core::trace::{
    command_usage_stats, native_search_count, parse_trajectory, strategy_stats, CommandClass,
    StrategyOptions, TrajectoryEvent,
};
use fsnav_core::types::{ContextRef, Dataset, Method, Question};

use crate::config::ExperimentConfig;
use crate::retrieve::MOCK_FIXTURE_ENV;
use crate::{config_failure, EXIT_OK, EXIT_PARTIAL};

/// On-disk layout produced by `ingest`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum IngestLayout {
    /// One `<id>.txt` file per document in a directory.
    Folder,
    /// All documents in one JSON object mapping id -> text.
    SingleJson,
    /// One long text file used verbatim.
    SingleDoc,
    /// Keep the input JSONL file in place.
    Jsonl,
}

/// Index backend selector for `index`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum IndexKind {
    Bm25,
    Dense,
}

// ------------------------------------------------------------------ gateway

/// Gateway from a mock fixture when given, else from endpoint env vars.
fn build_gateway(mock: Option<&Path>) -> anyhow::Result<Gateway> {
    match mock {
        Some(path) => Gateway::from_fixture_file(path, GatewaySettings::default())
            .map(|(gateway, _)| gateway)
            .map_err(|e| config_failure(format!("mock fixture {}: {e}", path.display()))),
        None => Gateway::from_env(GatewaySettings::default())
            .map_err(|e| config_failure(e.to_string())),
    }
}

// ------------------------------------------------------------------- ingest

pub fn cmd_ingest(
    name: &str,
    input: &Path,
    layout: IngestLayout,
    out: &Path,
) -> anyhow::Result<i32> {
    let root: &Path = match layout {
        IngestLayout::Jsonl => input,
        _ => out,
    };
    if let Ok(existing) = CorpusManifest::load(root) {
        println!(
            "corpus {} already ingested at {} ({} documents); nothing to do",
            existing.name,
            root.display(),
            existing.doc_count
        );
        return Ok(EXIT_OK);
    }

    let manifest = match layout {
        IngestLayout::Folder => {
            corpus::materialize_folder(name, corpus::ingest_jsonl(input)?, out)?
        }
        IngestLayout::SingleJson => {
            corpus::materialize_single_json(name, corpus::ingest_jsonl(input)?, out)?
        }
        IngestLayout::SingleDoc => {
            let text = std::fs::read_to_string(input)
                .with_context(|| format!("cannot read {}", input.display()))?;
            corpus::materialize_single_doc(name, &text, out)?
        }
        IngestLayout::Jsonl => corpus::register_jsonl(name, input)?,
    };
    println!(
        "ingested corpus {}: {} documents, {} chars, root {}",
        manifest.name,
        manifest.doc_count,
        manifest.total_chars,
        manifest.root.display()
    );
    Ok(EXIT_OK)
}

// -------------------------------------------------------------------- index

pub fn cmd_index(
    corpus_root: &Path,
    kind: IndexKind,
    embedding_model: Option<&str>,
    datapoint_id: Option<&str>,
    mock: Option<&Path>,
) -> anyhow::Result<i32> {
    let manifest = CorpusManifest::load(corpus_root)
        .map_err(|e| config_failure(format!("{}: {e}", corpus_root.display())))?;
    let retriever_kind = match kind {
        IndexKind::Bm25 => RetrieverKind::Bm25,
        IndexKind::Dense => {
            let tag = embedding_model
                .ok_or_else(|| config_failure("--kind dense requires --embedding-model"))?;
            RetrieverKind::Dense(tag.to_string())
        }
    };

    let gateway;
    let embedder = match &retriever_kind {
        RetrieverKind::Bm25 => None,
        RetrieverKind::Dense(tag) => {
            gateway = build_gateway(mock)?;
            Some(GatewayEmbedder::new(&gateway, tag))
        }
    };

    match datapoint_id {
        None => match &embedder {
            None => {
                let index = ensure_corpus_bm25(&manifest)?;
                println!(
                    "indexed {} units at {}",
                    index.len(),
                    corpus_index_path(&manifest, &retriever_kind).display()
                );
            }
            Some(e) => {
                let (store, _) = ensure_corpus_dense(&manifest, e)?;
                println!(
                    "embedded {} units at {}",
                    store.len(),
                    corpus_index_path(&manifest, &retriever_kind).display()
                );
            }
        },
        Some(dp) => match &embedder {
            None => {
                let index = ensure_chunk_bm25(&manifest.root, dp, DEFAULT_WORDS_PER_CHUNK)?;
                println!("indexed {} chunks for datapoint {dp}", index.len());
            }
            Some(e) => {
                let (store, _) =
                    ensure_chunk_dense(&manifest.root, dp, DEFAULT_WORDS_PER_CHUNK, e)?;
                println!("embedded {} chunks for datapoint {dp}", store.len());
            }
        },
    }
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------- run

fn load_questions(path: &Path, dataset: Dataset) -> anyhow::Result<Vec<Question>> {
    let data = std::fs::read_to_string(path)
        .map_err(|e| config_failure(format!("cannot read questions {}: {e}", path.display())))?;
    let mut questions = Vec::new();
    for (lineno, line) in data.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let q: Question = serde_json::from_str(line).map_err(|e| {
            config_failure(format!(
                "invalid question at {}:{}: {e}",
                path.display(),
                lineno + 1
            ))
        })?;
        if q.dataset == dataset {
            questions.push(q);
        }
    }
    if questions.is_empty() {
        return Err(config_failure(format!(
            "no questions for dataset {dataset} in {}",
            path.display()
        )));
    }
    Ok(questions)
}

/// Load or create the per-dataset sample shared by every method.
fn ensure_sample(
    cfg: &ExperimentConfig,
    out_root: &Path,
    questions: &[Question],
) -> anyhow::Result<SampleFile> {
    let sample_dir = out_root.join(cfg.dataset.id());
    let path = SampleFile::path(&sample_dir, cfg.dataset, cfg.seed);
    if path.exists() {
        let sample = SampleFile::load(&path)
            .map_err(|e| config_failure(format!("corrupt sample {}: {e}", path.display())))?;
        if sample.n != cfg.sample_n {
            return Err(config_failure(format!(
                "existing sample {} has n={}, config says sample_n={}; \
                 all methods must share one sample",
                path.display(),
                sample.n,
                cfg.sample_n
            )));
        }
        return Ok(sample);
    }
    let ids: Vec<String> = questions.iter().map(|q| q.id.clone()).collect();
    let question_ids = sample_benchmark(&ids, cfg.sample_n, cfg.seed)
        .map_err(|e| config_failure(e.to_string()))?;
    let sample = SampleFile {
        dataset: cfg.dataset,
        seed: cfg.seed,
        n: cfg.sample_n,
        question_ids,
    };
    sample
        .save(&sample_dir)
        .map_err(|e| config_failure(format!("cannot save sample: {e}")))?;
    Ok(sample)
}

/// How `run` obtains a retriever per question.
enum RetrieverSetup<'a> {
    None,
    /// One shared document-level retriever (corpus datasets).
    Shared(Retriever<'a>),
    /// Chunk-level retrievers opened per datapoint (long-document datasets).
    PerQuestion {
        root: &'a Path,
        kind: RetrieverKind,
        embedder: Option<&'a dyn Embedder>,
    },
}

fn with_retriever<T>(
    setup: &RetrieverSetup,
    q: &Question,
    f: impl FnOnce(&Retriever) -> Result<T, RunnerError>,
) -> Result<T, RunnerError> {
    match setup {
        RetrieverSetup::None => Err(RunnerError::ConfigError(
            "method requires a retriever".into(),
        )),
        RetrieverSetup::Shared(r) => f(r),
        RetrieverSetup::PerQuestion {
            root,
            kind,
            embedder,
        } => {
            let dp = match &q.context_ref {
                ContextRef::Datapoint { id } => id.clone(),
                ContextRef::Corpus => {
                    return Err(RunnerError::ConfigError(format!(
                        "question {} has no datapoint for chunk retrieval",
                        q.id
                    )))
                }
            };
            let retriever = open_chunk_retriever(root, &dp, 0, kind, *embedder)?;
            f(&retriever)
        }
    }
}

fn run_one(
    ctx: &RunnerCtx,
    cfg: &ExperimentConfig,
    manifest: &CorpusManifest,
    setup: &RetrieverSetup,
    agent: Option<&AgentConfig>,
    q: &Question,
) -> Result<RunResult, RunnerError> {
    match cfg.method {
        Method::FullContext => {
            let context = match &q.context_ref {
                ContextRef::Corpus => assemble_corpus_context(
                    manifest,
                    question_seed(cfg.seed, &q.id),
                    cfg.budgets.context_token_budget,
                    DEFAULT_CHARS_PER_TOKEN,
                )?,
                ContextRef::Datapoint { id } => read_datapoint_text(&manifest.root, id)?,
            };
            run_full_context(ctx, q, &context, &FullContextOptions::default())
        }
        Method::Rag => with_retriever(setup, q, |r| run_rag(ctx, q, r, RAG_TOP_K)),
        Method::React => with_retriever(setup, q, |r| run_react(ctx, q, r, cfg.budgets.max_steps)),
        Method::CodingAgent => {
            let agent = agent.expect("agent config built for coding_agent");
            run_coding_agent(ctx, q, manifest, agent)
        }
    }
}

fn read_results_file(path: &Path) -> anyhow::Result<Vec<RunResult>> {
    let mut results = Vec::new();
    if !path.exists() {
        return Ok(results);
    }
    let data = std::fs::read_to_string(path)?;
    for line in data.lines() {
        if line.trim().is_empty() {
            continue;
        }
        results.push(serde_json::from_str(line).with_context(|| {
            format!("corrupt results line in {}", path.display())
        })?);
    }
    Ok(results)
}

fn relativize(path: &Path, base: &Path) -> PathBuf {
    path.strip_prefix(base).map(Path::to_path_buf).unwrap_or_else(|_| path.to_path_buf())
}

pub fn cmd_run(
    config_path: &Path,
    out_root: &Path,
    run_id: Option<&str>,
    mock: Option<&Path>,
) -> anyhow::Result<i32> {
    let cfg = ExperimentConfig::load(config_path)?;
    cfg.validate()?;

    let manifest = CorpusManifest::load(&cfg.corpus)
        .map_err(|e| config_failure(format!("corpus {}: {e}", cfg.corpus.display())))?;
    let questions = load_questions(&cfg.questions, cfg.dataset)?;
    let by_id: HashMap<&str, &Question> =
        questions.iter().map(|q| (q.id.as_str(), q)).collect();
    let sample = ensure_sample(&cfg, out_root, &questions)?;

    // Retrieval methods need the document-level index built up front.
    let retriever_kind = cfg.retriever_kind();
    if let Some(kind) = &retriever_kind {
        if cfg.dataset.is_corpus() && !corpus_index_path(&manifest, kind).exists() {
            return Err(config_failure(format!(
                "no {} index for corpus {}; run `fsnav index --corpus {} --kind {}` first",
                kind.tag(),
                manifest.name,
                cfg.corpus.display(),
                match kind {
                    RetrieverKind::Bm25 => "bm25".to_string(),
                    RetrieverKind::Dense(tag) => format!("dense --embedding-model {tag}"),
                }
            )));
        }
    }

    let run_id = match run_id {
        Some(id) => id.to_string(),
        None if mock.is_some() => format!("mock-{}-{}", cfg.seed, cfg.retriever.label()),
        None => chrono::Utc::now().format("%Y%m%d-%H%M%S").to_string(),
    };
    let run_dir = out_root
        .join(cfg.dataset.id())
        .join(cfg.method.id())
        .join(&run_id);
    let trajectories_dir = run_dir.join("trajectories");
    std::fs::create_dir_all(&trajectories_dir)?;
    cfg.save_snapshot(&run_dir)?;
    std::fs::write(
        run_dir.join("sample.json"),
        serde_json::to_string_pretty(&sample)?,
    )?;

    // Resume: anything already in results.jsonl is done.
    let results_path = run_dir.join("results.jsonl");
    let existing = read_results_file(&results_path)?;
    let done: HashSet<String> = existing.iter().map(|r| r.question_id.clone()).collect();

    let mut todo: VecDeque<&Question> = VecDeque::new();
    for id in &sample.question_ids {
        if done.contains(id) {
            continue;
        }
        let q = by_id.get(id.as_str()).ok_or_else(|| {
            config_failure(format!("sampled question {id} missing from questions file"))
        })?;
        todo.push_back(q);
    }
    let planned = todo.len();

    // Chat gateway (not used by the external-agent method, but cheap).
    let gateway = build_gateway(mock)?;
    let deterministic = mock.is_some();

    // Shared retriever for corpus datasets; per-question for long documents.
    let query_embedder = match &retriever_kind {
        Some(RetrieverKind::Dense(tag)) => Some(GatewayEmbedder::new(&gateway, tag)),
        _ => None,
    };
    let embedder_ref = query_embedder.as_ref().map(|e| e as &dyn Embedder);
    let setup = match (&retriever_kind, cfg.method) {
        (_, Method::CodingAgent) | (None, _) => RetrieverSetup::None,
        (Some(kind), _) if cfg.dataset.is_corpus() => RetrieverSetup::Shared(
            open_corpus_retriever(&manifest, kind, embedder_ref)
                .map_err(|e| config_failure(e.to_string()))?,
        ),
        (Some(kind), _) => RetrieverSetup::PerQuestion {
            root: &manifest.root,
            kind: kind.clone(),
            embedder: embedder_ref,
        },
    };

    let agent_config = if cfg.method == Method::CodingAgent {
        let mut agent = AgentConfig::new(cfg.agent_command.clone(), run_dir.join("workspaces"));
        agent.retriever = retriever_kind.clone();
        agent.timeout = Duration::from_secs(cfg.budgets.agent_timeout_s);
        agent.keep_workspace = cfg.keep_workspaces;
        agent.retriever_bin = cfg
            .retriever_bin
            .clone()
            .or_else(|| std::env::var_os("FSNAV_RETRIEVER_BIN").map(PathBuf::from));
        if let Some(fixture) = mock {
            let fixture = std::fs::canonicalize(fixture)?;
            agent
                .env
                .push((MOCK_FIXTURE_ENV.to_string(), fixture.display().to_string()));
        }
        Some(agent)
    } else {
        None
    };

    let queue = Mutex::new(todo);
    let live_results: Mutex<Vec<RunResult>> = Mutex::new(Vec::new());
    let failures: Mutex<Vec<(String, String)>> = Mutex::new(Vec::new());
    let live_file = Mutex::new(std::io::BufWriter::new(
        std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&results_path)?,
    ));

    std::thread::scope(|scope| {
        for _ in 0..cfg.workers.min(planned.max(1)) {
            scope.spawn(|| {
                let ctx = RunnerCtx {
                    gateway: &gateway,
                    model: cfg.model.clone(),
                    trajectories_dir: trajectories_dir.clone(),
                    deterministic,
                };
                loop {
                    let q = match queue.lock().unwrap().pop_front() {
                        Some(q) => q,
                        None => break,
                    };
                    match run_one(&ctx, &cfg, &manifest, &setup, agent_config.as_ref(), q) {
                        Ok(mut result) => {
                            result.trajectory_path =
                                relativize(&result.trajectory_path, &run_dir);
                            let line = serde_json::to_string(&result)
                                .expect("run results serialize");
                            {
                                let mut file = live_file.lock().unwrap();
                                let _ = writeln!(file, "{line}");
                                let _ = file.flush();
                            }
                            live_results.lock().unwrap().push(result);
                        }
                        Err(e) => {
                            log::warn!("question {} failed: {e}", q.id);
                            failures
                                .lock()
                                .unwrap()
                                .push((q.id.clone(), e.to_string()));
                        }
                    }
                }
            });
        }
    });

    // Canonicalize: results.jsonl in sample order, one line per question.
    let mut all: HashMap<String, RunResult> = existing
        .into_iter()
        .map(|r| (r.question_id.clone(), r))
        .collect();
    for r in live_results.into_inner().unwrap() {
        all.insert(r.question_id.clone(), r);
    }
    drop(live_file);
    let mut out = std::io::BufWriter::new(std::fs::File::create(&results_path)?);
    let mut completed = 0usize;
    for id in &sample.question_ids {
        if let Some(r) = all.get(id) {
            writeln!(out, "{}", serde_json::to_string(r)?)?;
            completed += 1;
        }
    }
    out.flush()?;

    let failures = failures.into_inner().unwrap();
    let failures_path = run_dir.join("failures.json");
    if failures.is_empty() {
        let _ = std::fs::remove_file(&failures_path);
    } else {
        let map: BTreeMap<_, _> = failures.iter().cloned().collect();
        std::fs::write(&failures_path, serde_json::to_string_pretty(&map)?)?;
    }

    eprintln!(
        "run {}: {completed}/{} questions completed ({} already done, {} failed)",
        cfg.method_label(),
        sample.question_ids.len(),
        done.len(),
        failures.len()
    );
    for (id, err) in &failures {
        eprintln!("  failed {id}: {err}");
    }
    println!("{}", run_dir.display());
    Ok(if failures.is_empty() {
        EXIT_OK
    } else {
        EXIT_PARTIAL
    })
}

// --------------------------------------------------------------------- eval

fn load_run(run_dir: &Path) -> anyhow::Result<(ExperimentConfig, Vec<RunResult>)> {
    let cfg = ExperimentConfig::load(&run_dir.join("config.json"))?;
    let results = read_results_file(&run_dir.join("results.jsonl"))?;
    if results.is_empty() {
        return Err(config_failure(format!(
            "no results in {}; run the experiment first",
            run_dir.display()
        )));
    }
    Ok((cfg, results))
}

pub fn cmd_eval(run_dir: &Path, mock: Option<&Path>) -> anyhow::Result<i32> {
    let (cfg, results) = load_run(run_dir)?;
    let questions = load_questions(&cfg.questions, cfg.dataset)?;
    let by_id: HashMap<&str, &Question> =
        questions.iter().map(|q| (q.id.as_str(), q)).collect();

    // Free-form corpus answers are judged by a model; wire one only if the
    // config names it.
    let gateway;
    let judge: Option<(&Gateway, &str)> = match &cfg.judge_model {
        Some(model) => {
            gateway = build_gateway(mock)?;
            Some((&gateway, model.as_str()))
        }
        None => None,
    };

    let mut outcomes = Vec::with_capacity(results.len());
    for result in &results {
        let q = by_id.get(result.question_id.as_str()).ok_or_else(|| {
            config_failure(format!(
                "result for unknown question {}; questions file changed?",
                result.question_id
            ))
        })?;
        let outcome = score_question(q, &result.answer_text, judge)
            .with_context(|| format!("scoring {}", result.question_id))?;
        outcomes.push(outcome);
    }

    let outcomes_path = run_dir.join("outcomes.jsonl");
    let mut out = std::io::BufWriter::new(std::fs::File::create(&outcomes_path)?);
    for o in &outcomes {
        writeln!(out, "{}", serde_json::to_string(o)?)?;
    }
    out.flush()?;

    let accuracy = mean_score(&outcomes) * 100.0;
    let label = cfg.method_label();
    let mut scores = BTreeMap::new();
    scores.insert(cfg.dataset.id().to_string(), accuracy);
    let table = main_results_table(
        &[(label.clone(), scores)],
        &[cfg.dataset.id().to_string()],
    );
    table.write_to(&run_dir.join("reports"), "accuracy")?;

    println!(
        "{} {} accuracy {:.2} over {} questions",
        cfg.dataset,
        label,
        accuracy,
        outcomes.len()
    );
    Ok(EXIT_OK)
}

fn mean_score(outcomes: &[EvalOutcome]) -> f64 {
    if outcomes.is_empty() {
        return 0.0;
    }
    outcomes.iter().map(|o| o.score).sum::<f64>() / outcomes.len() as f64
}

// ------------------------------------------------------------------ analyze

struct LoadedRun {
    cfg: ExperimentConfig,
    results: Vec<RunResult>,
    trajectories: Vec<Vec<TrajectoryEvent>>,
    label: String,
}

fn load_run_with_trajectories(run_dir: &Path) -> anyhow::Result<LoadedRun> {
    let (cfg, results) = load_run(run_dir)?;
    let mut trajectories = Vec::with_capacity(results.len());
    for r in &results {
        let path = if r.trajectory_path.is_absolute() {
            r.trajectory_path.clone()
        } else {
            run_dir.join(&r.trajectory_path)
        };
        trajectories.push(
            parse_trajectory(&path)
                .with_context(|| format!("trajectory for {}", r.question_id))?,
        );
    }
    let label = cfg.method_label();
    Ok(LoadedRun {
        cfg,
        results,
        trajectories,
        label,
    })
}

/// Benchmarks present, in canonical dataset order.
fn benchmark_columns(runs: &[LoadedRun]) -> Vec<String> {
    Dataset::ALL
        .iter()
        .filter(|d| runs.iter().any(|r| r.cfg.dataset == **d))
        .map(|d| d.id().to_string())
        .collect()
}

pub fn cmd_analyze(
    run_dirs: &[PathBuf],
    prices: Option<&Path>,
    out: &Path,
) -> anyhow::Result<i32> {
    let mut runs = Vec::new();
    for dir in run_dirs {
        runs.push(load_run_with_trajectories(dir).with_context(|| dir.display().to_string())?);
    }
    let multi_dataset = runs
        .iter()
        .map(|r| r.cfg.dataset)
        .collect::<BTreeSet<_>>()
        .len()
        > 1;
    let row_label = |run: &LoadedRun| -> String {
        if multi_dataset {
            format!("{}:{}", run.cfg.dataset.id(), run.label)
        } else {
            run.label.clone()
        }
    };
    std::fs::create_dir_all(out)?;
    let mut rendered = Vec::new();

    // Command usage means per configuration (plus a diff row for pairs).
    let usage_rows: Vec<(String, BTreeMap<CommandClass, f64>)> = runs
        .iter()
        .filter(|r| !r.trajectories.is_empty())
        .map(|r| {
            command_usage_stats(&r.trajectories)
                .map(|stats| (row_label(r), stats))
                .map_err(|e| anyhow::anyhow!("{}: {e}", r.label))
        })
        .collect::<Result<_, _>>()?;
    let usage = command_usage_table(&usage_rows, &CommandClass::ALL);
    usage.write_to(out, "command_usage")?;
    rendered.push(usage.render_text());

    // Native search means per configuration.
    let native_rows: Vec<(String, f64)> = runs
        .iter()
        .map(|r| {
            let total: usize = r
                .trajectories
                .iter()
                .map(|t| native_search_count(t))
                .sum();
            let n = r.trajectories.len().max(1) as f64;
            (row_label(r), total as f64 / n)
        })
        .collect();
    let native = native_search_table(&native_rows);
    native.write_to(out, "native_search")?;
    rendered.push(native.render_text());

    // Strategy metrics per dataset, normalized per metric across datasets.
    let benchmarks = benchmark_columns(&runs);
    let mut per_dataset: BTreeMap<String, Vec<Vec<TrajectoryEvent>>> = BTreeMap::new();
    for run in &runs {
        per_dataset
            .entry(run.cfg.dataset.id().to_string())
            .or_default()
            .extend(run.trajectories.iter().cloned());
    }
    let mut metric_rows: Vec<(String, BTreeMap<String, f64>)> = vec![
        ("Search Intensity".to_string(), BTreeMap::new()),
        ("Read Volume".to_string(), BTreeMap::new()),
        ("Code Volume".to_string(), BTreeMap::new()),
    ];
    for (dataset, trajectories) in &per_dataset {
        let stats = strategy_stats(trajectories, StrategyOptions::default());
        metric_rows[0].1.insert(dataset.clone(), stats.search_intensity);
        metric_rows[1].1.insert(dataset.clone(), stats.read_volume);
        metric_rows[2].1.insert(dataset.clone(), stats.code_volume);
    }
    metric_rows.retain(|(_, values)| values.values().sum::<f64>() > 0.0);
    if !metric_rows.is_empty() {
        let strategy = strategy_figure_table(&metric_rows, &benchmarks)?;
        strategy.write_to(out, "strategy")?;
        rendered.push(strategy.render_text());
    }

    // Cost per query, when a price table is supplied.
    if let Some(prices_path) = prices {
        let prices = PriceTable::load(prices_path).map_err(|e| config_failure(e.to_string()))?;
        let mut cost_rows: Vec<(String, BTreeMap<String, f64>)> = Vec::new();
        for run in &runs {
            let mut total = 0.0;
            for r in &run.results {
                total += cost(&r.usage, &r.model, &prices)
                    .map_err(|e| config_failure(e.to_string()))?;
            }
            let mean = total / run.results.len() as f64;
            let label = run.label.clone();
            match cost_rows.iter_mut().find(|(l, _)| *l == label) {
                Some((_, cells)) => {
                    cells.insert(run.cfg.dataset.id().to_string(), mean);
                }
                None => {
                    let mut cells = BTreeMap::new();
                    cells.insert(run.cfg.dataset.id().to_string(), mean);
                    cost_rows.push((label, cells));
                }
            }
        }
        let costs = cost_table(&cost_rows, &benchmarks);
        costs.write_to(out, "cost")?;
        rendered.push(costs.render_text());
    }

    print!("{}", rendered.join("\n"));
    Ok(EXIT_OK)
}

// ------------------------------------------------------------------- report

fn read_outcomes(run_dir: &Path) -> anyhow::Result<Vec<EvalOutcome>> {
    let path = run_dir.join("outcomes.jsonl");
    if !path.exists() {
        return Err(config_failure(format!(
            "no outcomes in {}; run `fsnav eval --run-dir {}` first",
            run_dir.display(),
            run_dir.display()
        )));
    }
    let data = std::fs::read_to_string(&path)?;
    let mut outcomes = Vec::new();
    for line in data.lines() {
        if line.trim().is_empty() {
            continue;
        }
        outcomes.push(serde_json::from_str(line)?);
    }
    Ok(outcomes)
}

pub fn cmd_report(run_dirs: &[PathBuf], out: &Path) -> anyhow::Result<i32> {
    let mut rows: Vec<(String, BTreeMap<String, f64>)> = Vec::new();
    let mut datasets = BTreeSet::new();
    for dir in run_dirs {
        let cfg = ExperimentConfig::load(&dir.join("config.json"))?;
        let outcomes = read_outcomes(dir)?;
        let accuracy = mean_score(&outcomes) * 100.0;
        datasets.insert(cfg.dataset);
        let label = cfg.method_label();
        match rows.iter_mut().find(|(l, _)| *l == label) {
            Some((_, cells)) => {
                cells.insert(cfg.dataset.id().to_string(), accuracy);
            }
            None => {
                let mut cells = BTreeMap::new();
                cells.insert(cfg.dataset.id().to_string(), accuracy);
                rows.push((label, cells));
            }
        }
    }
    let benchmarks: Vec<String> = Dataset::ALL
        .iter()
        .filter(|d| datasets.contains(*d))
        .map(|d| d.id().to_string())
        .collect();
    let table = main_results_table(&rows, &benchmarks);
    table.write_to(out, "main_results")?;
    print!("{}", table.render_text());
    Ok(EXIT_OK)
}

