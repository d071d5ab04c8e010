//! Standalone retrieval CLI handed to coding agents inside their workspace.
//!
//! Prints one `----- <unit_id> (score S) -----` block per hit. Exit codes:
//! 0 success, 1 backend failure, 2 flag errors, 3 unknown dataset/datapoint.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fsnav_cli::retrieve::{run_retrieve, RetrieveFailure, RetrieveRequest};
use fsnav_cli::{EXIT_CONFIG, EXIT_PARTIAL, EXIT_USAGE};

#[derive(Parser)]
#[command(name = "retriever", about = "Search an indexed corpus or document")]
struct Args {
    /// Dataset name, resolved through the retriever registry.
    #[arg(long)]
    dataset: String,
    /// "BM25" or a dense embedding model tag.
    #[arg(long)]
    embedding_model: String,
    /// Number of hits to return.
    #[arg(long)]
    top_k: usize,
    /// Query string.
    #[arg(long)]
    query: String,
    /// Datapoint to search within (long-document datasets).
    #[arg(long)]
    datapoint_id: Option<String>,
    /// Explicit registry file (default: env, then ancestor search).
    #[arg(long)]
    registry: Option<PathBuf>,
    /// Serve embedding traffic from a mock fixture file.
    #[arg(long)]
    mock: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::init();
    let args = Args::parse();
    let request = RetrieveRequest {
        dataset: args.dataset,
        embedding_model: args.embedding_model,
        top_k: args.top_k,
        query: args.query,
        datapoint_id: args.datapoint_id,
        registry: args.registry,
        mock: args.mock,
    };
    match run_retrieve(&request) {
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
    }
}
