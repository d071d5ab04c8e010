//! Okapi BM25 inverted index with binary persistence.
//!
//! Scoring uses k1 = 1.2, b = 0.75 and the smoothed idf
//! `ln((N - df + 0.5) / (df + 0.5) + 1)`, which keeps every term's
//! contribution non-negative. Unit texts are stored inside the index file so
//! retrieval can return full text without touching the corpus again.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::Path;

use super::tokenize::tokenize;
use super::{RetrievalHit, RetrieverError};
use crate::binio;

pub const DEFAULT_K1: f64 = 1.2;
pub const DEFAULT_B: f64 = 0.75;

const MAGIC: &[u8; 8] = b"BM25IDX1";

/// In-memory BM25 index over `(unit_id, text)` pairs.
pub struct Bm25Index {
    k1: f64,
    b: f64,
    unit_ids: Vec<String>,
    texts: Vec<String>,
    doc_lens: Vec<u32>,
    avg_doc_len: f64,
    /// term -> postings of (unit index, term frequency)
    postings: HashMap<String, Vec<(u32, u32)>>,
}

impl Bm25Index {
    /// Build an index with the default Okapi parameters.
    pub fn build(units: &[(String, String)]) -> Result<Self, RetrieverError> {
        Self::build_with_params(units, DEFAULT_K1, DEFAULT_B)
    }

    pub fn build_with_params(
        units: &[(String, String)],
        k1: f64,
        b: f64,
    ) -> Result<Self, RetrieverError> {
        if units.is_empty() {
            return Err(RetrieverError::EmptyCorpus);
        }
        let mut unit_ids = Vec::with_capacity(units.len());
        let mut texts = Vec::with_capacity(units.len());
        let mut doc_lens = Vec::with_capacity(units.len());
        let mut postings: HashMap<String, Vec<(u32, u32)>> = HashMap::new();
        for (idx, (id, text)) in units.iter().enumerate() {
            let terms = tokenize(text);
            doc_lens.push(terms.len() as u32);
            let mut tf: HashMap<&str, u32> = HashMap::new();
            for t in &terms {
                *tf.entry(t.as_str()).or_insert(0) += 1;
            }
            for (term, count) in tf {
                postings
                    .entry(term.to_string())
                    .or_default()
                    .push((idx as u32, count));
            }
            unit_ids.push(id.clone());
            texts.push(text.clone());
        }
        // Postings were filled in unit order per term, so they are already
        // sorted by unit index; scoring relies on that for determinism.
        let avg_doc_len = doc_lens.iter().map(|&l| l as f64).sum::<f64>() / doc_lens.len() as f64;
        Ok(Bm25Index {
            k1,
            b,
            unit_ids,
            texts,
            doc_lens,
            avg_doc_len,
            postings,
        })
    }

    pub fn len(&self) -> usize {
        self.unit_ids.len()
    }

    /// Stored text of a unit, if indexed.
    pub fn text_of(&self, unit_id: &str) -> Option<&str> {
        self.unit_ids
            .iter()
            .position(|id| id == unit_id)
            .map(|i| self.texts[i].as_str())
    }

    pub fn is_empty(&self) -> bool {
        self.unit_ids.is_empty()
    }

    /// Score every unit against the query and return the top `k` hits.
    ///
    /// Ties are broken by unit id ascending so results are stable across
    /// rebuilds of the same corpus.
    pub fn search(&self, query: &str, k: usize) -> Vec<RetrievalHit> {
        let terms = tokenize(query);
        let n = self.unit_ids.len() as f64;
        let mut scores = vec![0.0f64; self.unit_ids.len()];
        for term in &terms {
            let Some(posts) = self.postings.get(term) else {
                continue;
            };
            let df = posts.len() as f64;
            let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
            for &(unit_idx, tf) in posts {
                let tf = tf as f64;
                let len_norm =
                    1.0 - self.b + self.b * self.doc_lens[unit_idx as usize] as f64 / self.avg_doc_len;
                scores[unit_idx as usize] += idf * tf * (self.k1 + 1.0) / (tf + self.k1 * len_norm);
            }
        }
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| {
            scores[b]
                .partial_cmp(&scores[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| self.unit_ids[a].cmp(&self.unit_ids[b]))
        });
        order
            .into_iter()
            .take(k)
            .map(|i| RetrievalHit {
                unit_id: self.unit_ids[i].clone(),
                score: scores[i],
                text: self.texts[i].clone(),
            })
            .collect()
    }

    /// Serialize to `path` (creating parent directories).
    pub fn save(&self, path: &Path) -> Result<(), RetrieverError> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let mut w = BufWriter::new(File::create(path)?);
        binio::write_magic(&mut w, MAGIC)?;
        binio::write_f64(&mut w, self.k1)?;
        binio::write_f64(&mut w, self.b)?;
        binio::write_u64(&mut w, self.unit_ids.len() as u64)?;
        for i in 0..self.unit_ids.len() {
            binio::write_str(&mut w, &self.unit_ids[i])?;
            binio::write_u32(&mut w, self.doc_lens[i])?;
            binio::write_str(&mut w, &self.texts[i])?;
        }
        // Terms sorted so identical indexes serialize to identical bytes.
        let mut terms: Vec<&String> = self.postings.keys().collect();
        terms.sort();
        binio::write_u64(&mut w, terms.len() as u64)?;
        for term in terms {
            binio::write_str(&mut w, term)?;
            let posts = &self.postings[term];
            binio::write_u64(&mut w, posts.len() as u64)?;
            for &(idx, tf) in posts {
                binio::write_u32(&mut w, idx)?;
                binio::write_u32(&mut w, tf)?;
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, RetrieverError> {
        let mut r = BufReader::new(File::open(path)?);
        binio::expect_magic(&mut r, MAGIC)?;
        let k1 = binio::read_f64(&mut r)?;
        let b = binio::read_f64(&mut r)?;
        let n_units = binio::read_u64(&mut r)? as usize;
        let mut unit_ids = Vec::with_capacity(n_units);
        let mut doc_lens = Vec::with_capacity(n_units);
        let mut texts = Vec::with_capacity(n_units);
        for _ in 0..n_units {
            unit_ids.push(binio::read_str(&mut r)?);
            doc_lens.push(binio::read_u32(&mut r)?);
            texts.push(binio::read_str(&mut r)?);
        }
        if n_units == 0 {
            return Err(RetrieverError::EmptyCorpus);
        }
        let avg_doc_len = doc_lens.iter().map(|&l| l as f64).sum::<f64>() / n_units as f64;
        let n_terms = binio::read_u64(&mut r)? as usize;
        let mut postings = HashMap::with_capacity(n_terms);
        for _ in 0..n_terms {
            let term = binio::read_str(&mut r)?;
            let n_posts = binio::read_u64(&mut r)? as usize;
            let mut posts = Vec::with_capacity(n_posts);
            for _ in 0..n_posts {
                let idx = binio::read_u32(&mut r)?;
                let tf = binio::read_u32(&mut r)?;
                posts.push((idx, tf));
            }
            postings.insert(term, posts);
        }
        Ok(Bm25Index {
            k1,
            b,
            unit_ids,
            texts,
            doc_lens,
            avg_doc_len,
            postings,
        })
    }
}
