//! Experiment harness: ingest corpora, build indexes, run methods over
//! benchmark questions, score answers, and render report tables.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fsnav_cli::commands::{self, IndexKind, IngestLayout};
use fsnav_cli::retrieve::{run_retrieve, RetrieveFailure, RetrieveRequest};
use fsnav_cli::{exit_code_for, EXIT_CONFIG, EXIT_PARTIAL, EXIT_USAGE};

#[derive(Parser)]
#[command(name = "fsnav", about = "Long-context question answering harness", version)]
struct Cli {
    /// Serve all model traffic from a mock fixture file instead of a live
    /// endpoint (deterministic offline runs).
    #[arg(long, global = true, value_name = "FIXTURE")]
    mock: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Materialize a corpus from JSONL into an on-disk layout.
    Ingest {
        /// Corpus name recorded in the manifest.
        #[arg(long)]
        name: String,
        /// Input JSONL file ({"id": ..., "text": ...} per line).
        #[arg(long)]
        input: PathBuf,
        /// On-disk layout to materialize.
        #[arg(long, value_enum)]
        layout: IngestLayout,
        /// Output root (directory for folder layout, file otherwise;
        /// ignored for jsonl, which registers the input in place).
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a retrieval index over an ingested corpus.
    Index {
        /// Corpus root (directory or file with a manifest).
        #[arg(long)]
        corpus: PathBuf,
        /// Index backend.
        #[arg(long, value_enum)]
        kind: IndexKind,
        /// Embedding model tag (dense only).
        #[arg(long)]
        embedding_model: Option<String>,
        /// Build a chunk-level index for one long-document datapoint
        /// instead of the document-level index.
        #[arg(long)]
        datapoint_id: Option<String>,
    },
    /// Query an index directly (same engine the agent-facing CLI uses).
    Retrieve {
        #[arg(long)]
        dataset: String,
        /// "BM25" or a dense embedding model tag.
        #[arg(long)]
        embedding_model: String,
        #[arg(long)]
        top_k: usize,
        #[arg(long)]
        query: String,
        /// Datapoint to search within (long-document datasets).
        #[arg(long)]
        datapoint_id: Option<String>,
        /// Explicit registry file (default: env, then ancestor search).
        #[arg(long)]
        registry: Option<PathBuf>,
    },
    /// Run one experiment configuration over its benchmark sample.
    Run {
        /// Experiment config file (.toml or .json).
        #[arg(long)]
        config: PathBuf,
        /// Root directory for run outputs.
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        /// Run identifier (default: timestamp, or a stable id under --mock).
        #[arg(long)]
        run_id: Option<String>,
    },
    /// Score a finished run's answers.
    Eval {
        #[arg(long)]
        run_dir: PathBuf,
    },
    /// Analyze trajectories: command usage, native search, strategy, cost.
    Analyze {
        /// Run directory to include (repeatable).
        #[arg(long = "run-dir", required = true)]
        run_dirs: Vec<PathBuf>,
        /// Model price table (.toml) to add per-query costs.
        #[arg(long)]
        prices: Option<PathBuf>,
        /// Output directory for report files.
        #[arg(long, default_value = "reports")]
        out: PathBuf,
    },
    /// Combine scored runs into the main accuracy table.
    Report {
        /// Run directory to include (repeatable).
        #[arg(long = "run-dir", required = true)]
        run_dirs: Vec<PathBuf>,
        /// Output directory for report files.
        #[arg(long, default_value = "reports")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let mock = cli.mock.as_deref();
    let outcome = match cli.command {
        Command::Ingest {
            name,
            input,
            layout,
            out,
        } => commands::cmd_ingest(&name, &input, layout, &out),
        Command::Index {
            corpus,
            kind,
            embedding_model,
            datapoint_id,
        } => commands::cmd_index(
            &corpus,
            kind,
            embedding_model.as_deref(),
            datapoint_id.as_deref(),
            mock,
        ),
        Command::Retrieve {
            dataset,
            embedding_model,
            top_k,
            query,
            datapoint_id,
            registry,
        } => {
            let request = RetrieveRequest {
                dataset,
                embedding_model,
                top_k,
                query,
                datapoint_id,
                registry,
                mock: cli.mock.clone(),
            };
            return match run_retrieve(&request) {
                Ok(blocks) => {
                    print!("{blocks}");
                    ExitCode::SUCCESS
                }
                Err(failure) => {
                    eprintln!("error: {failure}");
                    ExitCode::from(match failure {
                        RetrieveFailure::NotFound(_) => EXIT_CONFIG as u8,
                        RetrieveFailure::Usage(_) => EXIT_USAGE as u8,
                        RetrieveFailure::Other(_) => EXIT_PARTIAL as u8,
                    })
                }
            };
        }
        Command::Run {
            config,
            out,
            run_id,
        } => commands::cmd_run(&config, &out, run_id.as_deref(), mock),
        Command::Eval { run_dir } => commands::cmd_eval(&run_dir, mock),
        Command::Analyze {
            run_dirs,
            prices,
            out,
        } => commands::cmd_analyze(&run_dirs, prices.as_deref(), &out),
        Command::Report { run_dirs, out } => commands::cmd_report(&run_dirs, &out),
    };
    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err) as u8)
        }
    }
}
