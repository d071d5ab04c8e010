//! Retrieval over materialized corpora: sparse BM25 and dense embeddings.
//!
//! Two granularities exist. Corpus datasets retrieve whole documents;
//! long-document datasets retrieve fixed-size word chunks of one datapoint's
//! text. Indexes persist under the corpus's `.index/` directory and are built
//! lazily on first use.

pub mod bm25;
pub mod dense;
pub mod registry;
pub mod tokenize;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::corpus::{self, chunk_document, CorpusError, CorpusManifest, DEFAULT_WORDS_PER_CHUNK};
use bm25::Bm25Index;
use dense::{build_store, Embedder, EmbeddingCache, EmbeddingStore};

#[derive(Debug, thiserror::Error)]
pub enum RetrieverError {
    #[error("cannot build an index over an empty corpus")]
    EmptyCorpus,
    #[error("vector dimension mismatch: store holds {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unknown dataset: {0}")]
    UnknownDataset(String),
    #[error("unknown datapoint: {0}")]
    UnknownDatapoint(String),
    #[error("registry at {path}: {reason}")]
    Registry { path: PathBuf, reason: String },
    #[error("embedding backend: {0}")]
    Backend(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One retrieval result.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RetrievalHit {
    pub unit_id: String,
    pub score: f64,
    pub text: String,
}

/// Which backend answers a search: BM25 or a named embedding model.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetrieverKind {
    Bm25,
    Dense(String),
}

impl RetrieverKind {
    /// `"bm25"` (case-insensitive) is sparse; anything else names an
    /// embedding model.
    pub fn parse(s: &str) -> RetrieverKind {
        if s.eq_ignore_ascii_case("bm25") {
            RetrieverKind::Bm25
        } else {
            RetrieverKind::Dense(s.to_string())
        }
    }

    pub fn tag(&self) -> &str {
        match self {
            RetrieverKind::Bm25 => "bm25",
            RetrieverKind::Dense(tag) => tag,
        }
    }
}

/// A searchable index, ready to answer queries.
pub enum Retriever<'a> {
    Sparse(Bm25Index),
    Dense {
        store: EmbeddingStore,
        texts: HashMap<String, String>,
        embedder: &'a dyn Embedder,
    },
}

impl Retriever<'_> {
    /// Full text of a unit known to this retriever (document or chunk).
    pub fn get_unit(&self, unit_id: &str) -> Option<&str> {
        match self {
            Retriever::Sparse(index) => index.text_of(unit_id),
            Retriever::Dense { texts, .. } => texts.get(unit_id).map(String::as_str),
        }
    }

    pub fn search(&self, query: &str, k: usize) -> Result<Vec<RetrievalHit>, RetrieverError> {
        match self {
            Retriever::Sparse(index) => Ok(index.search(query, k)),
            Retriever::Dense {
                store,
                texts,
                embedder,
            } => {
                let q = embedder
                    .embed(&[query.to_string()])?
                    .into_iter()
                    .next()
                    .ok_or_else(|| {
                        RetrieverError::Backend("embedding backend returned no vector".into())
                    })?;
                let mut hits = store.search(&q, k)?;
                for hit in &mut hits {
                    if let Some(text) = texts.get(&hit.unit_id) {
                        hit.text = text.clone();
                    }
                }
                Ok(hits)
            }
        }
    }
}

fn bm25_index_path(index_root: &Path) -> PathBuf {
    index_root.join("bm25").join("index.bin")
}

fn dense_store_path(index_root: &Path, tag: &str) -> PathBuf {
    index_root.join("dense").join(tag).join("store.bin")
}

fn chunk_index_root(index_root: &Path, datapoint_id: &str) -> PathBuf {
    index_root
        .join("chunks")
        .join(corpus::sanitize_filename(datapoint_id))
}

/// On-disk location of a corpus's document-level index.
pub fn corpus_index_path(manifest: &CorpusManifest, kind: &RetrieverKind) -> PathBuf {
    let root = manifest.index_root();
    match kind {
        RetrieverKind::Bm25 => bm25_index_path(&root),
        RetrieverKind::Dense(tag) => dense_store_path(&root, tag),
    }
}

/// On-disk location of one datapoint's chunk-level index.
pub fn chunk_index_path(dataset_root: &Path, datapoint_id: &str, kind: &RetrieverKind) -> PathBuf {
    let root = chunk_index_root(&corpus::index_root_for(dataset_root), datapoint_id);
    match kind {
        RetrieverKind::Bm25 => root.join("bm25.bin"),
        RetrieverKind::Dense(tag) => root.join(format!("dense.{tag}.bin")),
    }
}

/// Load the document-level BM25 index for a corpus, building and persisting
/// it on first use.
pub fn ensure_corpus_bm25(manifest: &CorpusManifest) -> Result<Bm25Index, RetrieverError> {
    let path = bm25_index_path(&manifest.index_root());
    if path.exists() {
        return Bm25Index::load(&path);
    }
    let units = corpus::enumerate_units(manifest)?;
    let index = Bm25Index::build(&units)?;
    index.save(&path)?;
    Ok(index)
}

/// Load the chunk-level BM25 index for one datapoint of a long-document
/// dataset, building it from `<root>/<datapoint_id>.txt` on first use.
pub fn ensure_chunk_bm25(
    dataset_root: &Path,
    datapoint_id: &str,
    words_per_chunk: usize,
) -> Result<Bm25Index, RetrieverError> {
    let index_root = corpus::index_root_for(dataset_root);
    let path = chunk_index_root(&index_root, datapoint_id).join("bm25.bin");
    if path.exists() {
        return Bm25Index::load(&path);
    }
    let units = chunk_units(dataset_root, datapoint_id, words_per_chunk)?;
    let index = Bm25Index::build(&units)?;
    index.save(&path)?;
    Ok(index)
}

/// Chunk one datapoint's text into `(unit_id, text)` pairs.
pub fn chunk_units(
    dataset_root: &Path,
    datapoint_id: &str,
    words_per_chunk: usize,
) -> Result<Vec<(String, String)>, RetrieverError> {
    let txt = dataset_root.join(format!("{}.txt", corpus::sanitize_filename(datapoint_id)));
    if !txt.exists() {
        return Err(RetrieverError::UnknownDatapoint(datapoint_id.to_string()));
    }
    let text = std::fs::read_to_string(&txt)?;
    Ok(chunk_document(datapoint_id, &text, words_per_chunk)
        .into_iter()
        .map(|c| (c.unit_id(), c.text))
        .collect())
}

/// Load the document-level dense store for a corpus, embedding and persisting
/// on first use. Returns the store plus an id -> text map for hit texts.
pub fn ensure_corpus_dense(
    manifest: &CorpusManifest,
    embedder: &dyn Embedder,
) -> Result<(EmbeddingStore, HashMap<String, String>), RetrieverError> {
    let index_root = manifest.index_root();
    let path = dense_store_path(&index_root, embedder.tag());
    let units = corpus::enumerate_units(manifest)?;
    let texts: HashMap<String, String> = units.iter().cloned().collect();
    if path.exists() {
        return Ok((EmbeddingStore::load(&path)?, texts));
    }
    let cache = EmbeddingCache::new(&index_root.join("cache"), embedder.tag())?;
    let store = build_store(embedder, &units, Some(&cache), 64)?;
    store.save(&path)?;
    Ok((store, texts))
}

/// Chunk-level dense store for one datapoint of a long-document dataset.
pub fn ensure_chunk_dense(
    dataset_root: &Path,
    datapoint_id: &str,
    words_per_chunk: usize,
    embedder: &dyn Embedder,
) -> Result<(EmbeddingStore, HashMap<String, String>), RetrieverError> {
    let index_root = corpus::index_root_for(dataset_root);
    let chunk_root = chunk_index_root(&index_root, datapoint_id);
    let path = chunk_root.join(format!("dense.{}.bin", embedder.tag()));
    let units = chunk_units(dataset_root, datapoint_id, words_per_chunk)?;
    let texts: HashMap<String, String> = units.iter().cloned().collect();
    if path.exists() {
        return Ok((EmbeddingStore::load(&path)?, texts));
    }
    let cache = EmbeddingCache::new(&index_root.join("cache"), embedder.tag())?;
    let store = build_store(embedder, &units, Some(&cache), 64)?;
    store.save(&path)?;
    Ok((store, texts))
}

/// Open a document-level retriever for a corpus.
pub fn open_corpus_retriever<'a>(
    manifest: &CorpusManifest,
    kind: &RetrieverKind,
    embedder: Option<&'a dyn Embedder>,
) -> Result<Retriever<'a>, RetrieverError> {
    match kind {
        RetrieverKind::Bm25 => Ok(Retriever::Sparse(ensure_corpus_bm25(manifest)?)),
        RetrieverKind::Dense(tag) => {
            let embedder = embedder.ok_or_else(|| {
                RetrieverError::Backend(format!("no embedding backend wired for model {tag}"))
            })?;
            let (store, texts) = ensure_corpus_dense(manifest, embedder)?;
            Ok(Retriever::Dense {
                store,
                texts,
                embedder,
            })
        }
    }
}

/// Open a chunk-level retriever for one datapoint of a long-document dataset.
pub fn open_chunk_retriever<'a>(
    dataset_root: &Path,
    datapoint_id: &str,
    words_per_chunk: usize,
    kind: &RetrieverKind,
    embedder: Option<&'a dyn Embedder>,
) -> Result<Retriever<'a>, RetrieverError> {
    let words = if words_per_chunk == 0 {
        DEFAULT_WORDS_PER_CHUNK
    } else {
        words_per_chunk
    };
    match kind {
        RetrieverKind::Bm25 => Ok(Retriever::Sparse(ensure_chunk_bm25(
            dataset_root,
            datapoint_id,
            words,
        )?)),
        RetrieverKind::Dense(tag) => {
            let embedder = embedder.ok_or_else(|| {
                RetrieverError::Backend(format!("no embedding backend wired for model {tag}"))
            })?;
            let (store, texts) = ensure_chunk_dense(dataset_root, datapoint_id, words, embedder)?;
            Ok(Retriever::Dense {
                store,
                texts,
                embedder,
            })
        }
    }
}

/// Render hits in the block format the retriever CLI prints:
/// a `----- <unit_id> (score S) -----` header line, the unit text,
/// and a blank separator line per hit.
pub fn format_hits(hits: &[RetrievalHit]) -> String {
    let mut out = String::new();
    for hit in hits {
        writeln!(out, "----- {} (score {:.4}) -----", hit.unit_id, hit.score).unwrap();
        out.push_str(&hit.text);
        out.push_str("\n\n");
    }
    out
}
