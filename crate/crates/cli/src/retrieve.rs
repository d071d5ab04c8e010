//! Shared retrieval entry point behind the standalone `retriever` CLI and
//! `fsnav retrieve`: resolve the dataset through the registry, open (or
//! lazily build) the right index, search, and render result blocks.

use std::path::{Path, PathBuf};

use fsnav_core::corpus::CorpusManifest;
use fsnav_core::gateway::{Gateway, GatewayEmbedder, GatewaySettings};
use fsnav_core::retriever::registry::{DatasetKind, Registry};
use fsnav_core::retriever::{
    format_hits, open_chunk_retriever, open_corpus_retriever, RetrieverError, RetrieverKind,
};

/// Environment variable carrying a mock-transport fixture path; when set,
/// dense query embeddings come from the fixture instead of a live endpoint.
pub const MOCK_FIXTURE_ENV: &str = "FSNAV_MOCK_FIXTURE";

/// One retrieval request, mirroring the CLI flags.
#[derive(Debug, Clone)]
pub struct RetrieveRequest {
    pub dataset: String,
    pub embedding_model: String,
    pub top_k: usize,
    pub query: String,
    pub datapoint_id: Option<String>,
    /// Explicit registry path; defaults to env / ancestor discovery.
    pub registry: Option<PathBuf>,
    /// Mock fixture; defaults to the `FSNAV_MOCK_FIXTURE` env var.
    pub mock: Option<PathBuf>,
}

/// Failure classes mapped to distinct exit codes by the binaries.
#[derive(Debug)]
pub enum RetrieveFailure {
    /// Unknown dataset/datapoint or unusable registry — exit 3.
    NotFound(String),
    /// Request shape errors (e.g. missing `--datapoint-id`) — exit 2.
    Usage(String),
    /// Backend/IO failures — exit 1.
    Other(String),
}

impl std::fmt::Display for RetrieveFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RetrieveFailure::NotFound(m)
            | RetrieveFailure::Usage(m)
            | RetrieveFailure::Other(m) => f.write_str(m),
        }
    }
}

fn classify_error(err: RetrieverError) -> RetrieveFailure {
    match err {
        RetrieverError::UnknownDataset(_)
        | RetrieverError::UnknownDatapoint(_)
        | RetrieverError::Registry { .. } => RetrieveFailure::NotFound(err.to_string()),
        other => RetrieveFailure::Other(other.to_string()),
    }
}

/// Execute one retrieval and return the rendered hit blocks.
pub fn run_retrieve(req: &RetrieveRequest) -> Result<String, RetrieveFailure> {
    let cwd = std::env::current_dir()
        .map_err(|e| RetrieveFailure::Other(format!("cannot resolve working directory: {e}")))?;
    let registry = Registry::discover(req.registry.as_deref(), &cwd).map_err(classify_error)?;
    let entry = registry.get(&req.dataset).map_err(classify_error)?;
    let kind = RetrieverKind::parse(&req.embedding_model);

    // Dense retrieval embeds the query; wire a gateway for it only then.
    let gateway = match &kind {
        RetrieverKind::Bm25 => None,
        RetrieverKind::Dense(_) => Some(build_gateway(req.mock.as_deref())?),
    };
    let embedder = gateway
        .as_ref()
        .map(|g| GatewayEmbedder::new(g, &req.embedding_model));
    let embedder_ref = embedder
        .as_ref()
        .map(|e| e as &dyn fsnav_core::retriever::dense::Embedder);

    let retriever = match entry.kind {
        DatasetKind::Corpus => {
            let manifest = CorpusManifest::load(&entry.root).map_err(|e| {
                RetrieveFailure::NotFound(format!(
                    "dataset {} has no corpus manifest under {}: {e}",
                    req.dataset,
                    entry.root.display()
                ))
            })?;
            open_corpus_retriever(&manifest, &kind, embedder_ref).map_err(classify_error)?
        }
        DatasetKind::LongDoc => {
            let dp = req.datapoint_id.as_deref().ok_or_else(|| {
                RetrieveFailure::Usage(format!(
                    "dataset {} is a long-document dataset; pass --datapoint-id",
                    req.dataset
                ))
            })?;
            open_chunk_retriever(&entry.root, dp, 0, &kind, embedder_ref)
                .map_err(classify_error)?
        }
    };
    let hits = retriever
        .search(&req.query, req.top_k)
        .map_err(classify_error)?;
    Ok(format_hits(&hits))
}

fn build_gateway(mock: Option<&Path>) -> Result<Gateway, RetrieveFailure> {
    let env_fixture = std::env::var(MOCK_FIXTURE_ENV).ok().filter(|v| !v.is_empty());
    let fixture = mock
        .map(Path::to_path_buf)
        .or_else(|| env_fixture.map(PathBuf::from));
    match fixture {
        Some(path) => Gateway::from_fixture_file(&path, GatewaySettings::default())
            .map(|(gateway, _)| gateway)
            .map_err(|e| RetrieveFailure::Other(format!("mock fixture {}: {e}", path.display()))),
        None => Gateway::from_env(GatewaySettings::default())
            .map_err(|e| RetrieveFailure::Other(e.to_string())),
    }
}
