//! Dense (embedding) retrieval over persisted vectors.
//!
//! Unit vectors come from an embedding backend supplied by the caller; this
//! module owns storage, the per-text cache, and cosine-similarity search.
//! All vectors in one store must share a dimension.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::{RetrievalHit, RetrieverError};
use crate::binio;

const MAGIC: &[u8; 8] = b"DENSESTR";

/// Embedding backend: maps a batch of texts to one vector each.
///
/// `Send + Sync` so retrievers backed by an embedder can be shared across
/// worker threads.
pub trait Embedder: Send + Sync {
    /// Identifier of the embedding model, used to namespace stores/caches.
    fn tag(&self) -> &str;
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, RetrieverError>;
}

/// Persisted collection of `(unit_id, vector)` pairs for one embedding model.
pub struct EmbeddingStore {
    tag: String,
    unit_ids: Vec<String>,
    vectors: Vec<Vec<f32>>,
    dim: usize,
}

impl EmbeddingStore {
    pub fn new(tag: &str) -> Self {
        EmbeddingStore {
            tag: tag.to_string(),
            unit_ids: Vec::new(),
            vectors: Vec::new(),
            dim: 0,
        }
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn len(&self) -> usize {
        self.unit_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unit_ids.is_empty()
    }

    pub fn push(&mut self, unit_id: String, vector: Vec<f32>) -> Result<(), RetrieverError> {
        if self.vectors.is_empty() {
            self.dim = vector.len();
        } else if vector.len() != self.dim {
            return Err(RetrieverError::DimensionMismatch {
                expected: self.dim,
                found: vector.len(),
            });
        }
        self.unit_ids.push(unit_id);
        self.vectors.push(vector);
        Ok(())
    }

    /// Cosine-similarity search; ties break by unit id ascending.
    pub fn search(&self, query: &[f32], k: usize) -> Result<Vec<RetrievalHit>, RetrieverError> {
        if self.is_empty() {
            return Err(RetrieverError::EmptyCorpus);
        }
        if query.len() != self.dim {
            return Err(RetrieverError::DimensionMismatch {
                expected: self.dim,
                found: query.len(),
            });
        }
        let scores: Vec<f64> = self.vectors.iter().map(|v| cosine(query, v)).collect();
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| {
            scores[b]
                .partial_cmp(&scores[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| self.unit_ids[a].cmp(&self.unit_ids[b]))
        });
        Ok(order
            .into_iter()
            .take(k)
            .map(|i| RetrievalHit {
                unit_id: self.unit_ids[i].clone(),
                score: scores[i],
                text: String::new(), // texts live in the corpus, not the store
            })
            .collect())
    }

    pub fn save(&self, path: &Path) -> Result<(), RetrieverError> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let mut w = BufWriter::new(File::create(path)?);
        binio::write_magic(&mut w, MAGIC)?;
        binio::write_str(&mut w, &self.tag)?;
        binio::write_u64(&mut w, self.unit_ids.len() as u64)?;
        for (id, vec) in self.unit_ids.iter().zip(&self.vectors) {
            binio::write_str(&mut w, id)?;
            binio::write_u32(&mut w, vec.len() as u32)?;
            for &x in vec {
                binio::write_f32(&mut w, x)?;
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, RetrieverError> {
        let mut r = BufReader::new(File::open(path)?);
        binio::expect_magic(&mut r, MAGIC)?;
        let tag = binio::read_str(&mut r)?;
        let n = binio::read_u64(&mut r)? as usize;
        let mut store = EmbeddingStore::new(&tag);
        for _ in 0..n {
            let id = binio::read_str(&mut r)?;
            let dim = binio::read_u32(&mut r)? as usize;
            let mut vec = Vec::with_capacity(dim);
            for _ in 0..dim {
                vec.push(binio::read_f32(&mut r)?);
            }
            store.push(id, vec)?;
        }
        Ok(store)
    }
}

fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let mut dot = 0.0f64;
    let mut na = 0.0f64;
    let mut nb = 0.0f64;
    for (&x, &y) in a.iter().zip(b) {
        dot += x as f64 * y as f64;
        na += (x as f64).powi(2);
        nb += (y as f64).powi(2);
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na.sqrt() * nb.sqrt())
}

/// Content-addressed embedding cache: one vector file per distinct text, so
/// re-indexing an unchanged corpus never re-embeds anything.
pub struct EmbeddingCache {
    dir: PathBuf,
}

impl EmbeddingCache {
    /// Cache under `<cache_dir>/<model tag>/`.
    pub fn new(cache_dir: &Path, tag: &str) -> Result<Self, RetrieverError> {
        let dir = cache_dir.join(tag);
        fs::create_dir_all(&dir)?;
        Ok(EmbeddingCache { dir })
    }

    fn path_for(&self, text: &str) -> PathBuf {
        let digest = Sha256::digest(text.as_bytes());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.dir.join(format!("{hex}.vec"))
    }

    pub fn get(&self, text: &str) -> Result<Option<Vec<f32>>, RetrieverError> {
        let path = self.path_for(text);
        if !path.exists() {
            return Ok(None);
        }
        let mut r = BufReader::new(File::open(&path)?);
        let dim = binio::read_u32(&mut r)? as usize;
        let mut vec = Vec::with_capacity(dim);
        for _ in 0..dim {
            vec.push(binio::read_f32(&mut r)?);
        }
        Ok(Some(vec))
    }

    pub fn put(&self, text: &str, vector: &[f32]) -> Result<(), RetrieverError> {
        let path = self.path_for(text);
        let mut w = BufWriter::new(File::create(&path)?);
        binio::write_u32(&mut w, vector.len() as u32)?;
        for &x in vector {
            binio::write_f32(&mut w, x)?;
        }
        Ok(())
    }
}

/// Embed every unit, consulting (and filling) the cache, then return a store.
///
/// Uncached texts are embedded in batches of `batch_size`.
pub fn build_store(
    embedder: &dyn Embedder,
    units: &[(String, String)],
    cache: Option<&EmbeddingCache>,
    batch_size: usize,
) -> Result<EmbeddingStore, RetrieverError> {
    if units.is_empty() {
        return Err(RetrieverError::EmptyCorpus);
    }
    let mut vectors: Vec<Option<Vec<f32>>> = vec![None; units.len()];
    let mut pending: Vec<usize> = Vec::new();
    for (i, (_, text)) in units.iter().enumerate() {
        if let Some(c) = cache {
            if let Some(v) = c.get(text)? {
                vectors[i] = Some(v);
                continue;
            }
        }
        pending.push(i);
    }
    for batch in pending.chunks(batch_size.max(1)) {
        let texts: Vec<String> = batch.iter().map(|&i| units[i].1.clone()).collect();
        let embedded = embedder.embed(&texts)?;
        if embedded.len() != texts.len() {
            return Err(RetrieverError::Backend(format!(
                "embedding batch returned {} vectors for {} texts",
                embedded.len(),
                texts.len()
            )));
        }
        for (&i, vec) in batch.iter().zip(embedded) {
            if let Some(c) = cache {
                c.put(&units[i].1, &vec)?;
            }
            vectors[i] = Some(vec);
        }
    }
    let mut store = EmbeddingStore::new(embedder.tag());
    for (i, (id, _)) in units.iter().enumerate() {
        store.push(id.clone(), vectors[i].take().expect("vector filled above"))?;
    }
    Ok(store)
}
