//! Corpus ingestion and materialization.
//!
//! Raw document collections arrive as JSONL; this module streams them in and
//! writes them out in the on-disk layouts the harness navigates: one file per
//! document, a single JSON dictionary, a single long text file, or the JSONL
//! kept in place. It also splits documents into fixed-size word chunks for
//! retrieval.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

/// Default retrieval chunk size, in whitespace-separated words.
pub const DEFAULT_WORDS_PER_CHUNK: usize = 300;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("malformed line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("duplicate document id: {0}")]
    DuplicateId(String),
    #[error("ids {first} and {second} both sanitize to filename {filename}")]
    IdCollisionAfterSanitize {
        filename: String,
        first: String,
        second: String,
    },
    #[error("manifest not found at {0}")]
    ManifestMissing(PathBuf),
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CorpusError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// One document of a corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub text: String,
}

/// How a corpus is laid out on disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusLayout {
    /// One `<id>.txt` file per document inside a directory.
    Folder,
    /// A single JSON object mapping id -> text.
    SingleJson,
    /// One long text file holding the entire context.
    SingleDoc,
    /// The source JSONL file used in place.
    Jsonl,
}

/// Metadata describing a materialized corpus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub name: String,
    pub layout: CorpusLayout,
    pub root: PathBuf,
    pub doc_count: u64,
    pub total_chars: u64,
}

impl CorpusManifest {
    /// Where the manifest sidecar lives for a given corpus root.
    ///
    /// Directory layouts keep it inside the directory; file layouts keep it
    /// next to the file.
    pub fn sidecar_path(root: &Path) -> PathBuf {
        if root.is_dir() {
            root.join("manifest.json")
        } else {
            let name = root
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| "corpus".to_string());
            root.with_file_name(format!("{name}.manifest.json"))
        }
    }

    pub fn save(&self) -> Result<(), CorpusError> {
        let path = Self::sidecar_path(&self.root);
        let json = serde_json::to_string_pretty(self)?;
        fs::write(&path, json).map_err(|e| CorpusError::io(&path, e))
    }

    pub fn load(root: &Path) -> Result<Self, CorpusError> {
        let path = Self::sidecar_path(root);
        if !path.exists() {
            return Err(CorpusError::ManifestMissing(path));
        }
        let data = fs::read_to_string(&path).map_err(|e| CorpusError::io(&path, e))?;
        Ok(serde_json::from_str(&data)?)
    }

    /// Directory that holds retrieval indexes for this corpus.
    pub fn index_root(&self) -> PathBuf {
        index_root_for(&self.root)
    }
}

/// `.index/` directory associated with a corpus root (beside file roots,
/// inside directory roots).
pub fn index_root_for(root: &Path) -> PathBuf {
    if root.is_dir() {
        root.join(".index")
    } else {
        root.parent().unwrap_or(Path::new(".")).join(".index")
    }
}

/// A fixed-size word span of a parent document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkRecord {
    pub parent_id: String,
    pub chunk_index: usize,
    pub word_start: usize,
    pub word_end: usize,
    pub text: String,
}

impl ChunkRecord {
    /// Unit id used when chunks act as retrieval units: `<parent>#<index>`.
    pub fn unit_id(&self) -> String {
        format!("{}#{}", self.parent_id, self.chunk_index)
    }
}

/// Streams documents out of a JSONL file, one per non-blank line.
///
/// Lines are parsed lazily so memory stays bounded by the largest single
/// document, not the file. Ids must be unique across the stream.
pub struct JsonlReader {
    lines: std::io::Lines<BufReader<File>>,
    line_no: usize,
    seen: std::collections::HashSet<String>,
}

#[derive(Debug, Deserialize)]
struct RawDoc {
    id: Option<String>,
    title: Option<String>,
    text: Option<String>,
}

impl JsonlReader {
    pub fn open(path: &Path) -> Result<Self, CorpusError> {
        let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
        Ok(JsonlReader {
            lines: BufReader::new(file).lines(),
            line_no: 0,
            seen: std::collections::HashSet::new(),
        })
    }
}

impl Iterator for JsonlReader {
    type Item = Result<DocumentRecord, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.line_no += 1;
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => {
                    return Some(Err(CorpusError::MalformedLine {
                        line: self.line_no,
                        reason: e.to_string(),
                    }))
                }
            };
            if line.trim().is_empty() {
                continue; // blank lines are skipped, not errors
            }
            let raw: RawDoc = match serde_json::from_str(&line) {
                Ok(r) => r,
                Err(e) => {
                    return Some(Err(CorpusError::MalformedLine {
                        line: self.line_no,
                        reason: e.to_string(),
                    }))
                }
            };
            let id = match raw.id {
                Some(id) if !id.is_empty() => id,
                _ => {
                    return Some(Err(CorpusError::MalformedLine {
                        line: self.line_no,
                        reason: "missing required field `id`".to_string(),
                    }))
                }
            };
            let text = match raw.text {
                Some(t) => t,
                None => {
                    return Some(Err(CorpusError::MalformedLine {
                        line: self.line_no,
                        reason: "missing required field `text`".to_string(),
                    }))
                }
            };
            if !self.seen.insert(id.clone()) {
                return Some(Err(CorpusError::DuplicateId(id)));
            }
            return Some(Ok(DocumentRecord {
                id,
                title: raw.title,
                text,
            }));
        }
    }
}

/// Open a JSONL corpus for streaming ingestion.
pub fn ingest_jsonl(path: &Path) -> Result<JsonlReader, CorpusError> {
    JsonlReader::open(path)
}

/// Replace path separators and NUL with `_` so an id can name a file.
pub fn sanitize_filename(id: &str) -> String {
    id.chars()
        .map(|c| if c == '/' || c == '\\' || c == '\0' { '_' } else { c })
        .collect()
}

/// Write one `<sanitized_id>.txt` per document into `out_dir`.
pub fn materialize_folder<I>(
    name: &str,
    docs: I,
    out_dir: &Path,
) -> Result<CorpusManifest, CorpusError>
where
    I: IntoIterator<Item = Result<DocumentRecord, CorpusError>>,
{
    fs::create_dir_all(out_dir).map_err(|e| CorpusError::io(out_dir, e))?;
    let mut filenames: HashMap<String, String> = HashMap::new();
    let mut doc_count = 0u64;
    let mut total_chars = 0u64;
    for doc in docs {
        let doc = doc?;
        let stem = sanitize_filename(&doc.id);
        if let Some(first) = filenames.get(&stem) {
            if first != &doc.id {
                return Err(CorpusError::IdCollisionAfterSanitize {
                    filename: format!("{stem}.txt"),
                    first: first.clone(),
                    second: doc.id,
                });
            }
            return Err(CorpusError::DuplicateId(doc.id));
        }
        let path = out_dir.join(format!("{stem}.txt"));
        fs::write(&path, doc.text.as_bytes()).map_err(|e| CorpusError::io(&path, e))?;
        filenames.insert(stem, doc.id);
        doc_count += 1;
        total_chars += doc.text.chars().count() as u64;
    }
    let manifest = CorpusManifest {
        name: name.to_string(),
        layout: CorpusLayout::Folder,
        root: out_dir.to_path_buf(),
        doc_count,
        total_chars,
    };
    manifest.save()?;
    Ok(manifest)
}

/// Write all documents as one JSON object mapping id -> text.
///
/// Keys keep ingestion order; the object is streamed so the whole corpus is
/// never held in memory.
pub fn materialize_single_json<I>(
    name: &str,
    docs: I,
    out_path: &Path,
) -> Result<CorpusManifest, CorpusError>
where
    I: IntoIterator<Item = Result<DocumentRecord, CorpusError>>,
{
    if let Some(parent) = out_path.parent() {
        fs::create_dir_all(parent).map_err(|e| CorpusError::io(parent, e))?;
    }
    let file = File::create(out_path).map_err(|e| CorpusError::io(out_path, e))?;
    let mut w = BufWriter::new(file);
    let mut seen = std::collections::HashSet::new();
    let mut doc_count = 0u64;
    let mut total_chars = 0u64;
    w.write_all(b"{").map_err(|e| CorpusError::io(out_path, e))?;
    for doc in docs {
        let doc = doc?;
        if !seen.insert(doc.id.clone()) {
            return Err(CorpusError::DuplicateId(doc.id));
        }
        if doc_count > 0 {
            w.write_all(b",").map_err(|e| CorpusError::io(out_path, e))?;
        }
        serde_json::to_writer(&mut w, &doc.id)?;
        w.write_all(b":").map_err(|e| CorpusError::io(out_path, e))?;
        serde_json::to_writer(&mut w, &doc.text)?;
        doc_count += 1;
        total_chars += doc.text.chars().count() as u64;
    }
    w.write_all(b"}").map_err(|e| CorpusError::io(out_path, e))?;
    w.flush().map_err(|e| CorpusError::io(out_path, e))?;
    let manifest = CorpusManifest {
        name: name.to_string(),
        layout: CorpusLayout::SingleJson,
        root: out_path.to_path_buf(),
        doc_count,
        total_chars,
    };
    manifest.save()?;
    Ok(manifest)
}

/// Write one long context into a single text file.
pub fn materialize_single_doc(
    name: &str,
    context: &str,
    out_path: &Path,
) -> Result<CorpusManifest, CorpusError> {
    if let Some(parent) = out_path.parent() {
        fs::create_dir_all(parent).map_err(|e| CorpusError::io(parent, e))?;
    }
    fs::write(out_path, context.as_bytes()).map_err(|e| CorpusError::io(out_path, e))?;
    let manifest = CorpusManifest {
        name: name.to_string(),
        layout: CorpusLayout::SingleDoc,
        root: out_path.to_path_buf(),
        doc_count: 1,
        total_chars: context.chars().count() as u64,
    };
    manifest.save()?;
    Ok(manifest)
}

/// Validate a JSONL corpus in place and write a manifest for it.
pub fn register_jsonl(name: &str, path: &Path) -> Result<CorpusManifest, CorpusError> {
    let mut doc_count = 0u64;
    let mut total_chars = 0u64;
    for doc in ingest_jsonl(path)? {
        let doc = doc?;
        doc_count += 1;
        total_chars += doc.text.chars().count() as u64;
    }
    let manifest = CorpusManifest {
        name: name.to_string(),
        layout: CorpusLayout::Jsonl,
        root: path.to_path_buf(),
        doc_count,
        total_chars,
    };
    manifest.save()?;
    Ok(manifest)
}

/// Split a document into chunks of `words_per_chunk` whitespace-separated
/// words. Every chunk except possibly the last has exactly that many words;
/// an empty document yields no chunks.
pub fn chunk_document(parent_id: &str, text: &str, words_per_chunk: usize) -> Vec<ChunkRecord> {
    assert!(words_per_chunk >= 1, "words_per_chunk must be positive");
    let words: Vec<&str> = text.split_whitespace().collect();
    let mut chunks = Vec::with_capacity(words.len() / words_per_chunk + 1);
    let mut start = 0;
    while start < words.len() {
        let end = (start + words_per_chunk).min(words.len());
        chunks.push(ChunkRecord {
            parent_id: parent_id.to_string(),
            chunk_index: chunks.len(),
            word_start: start,
            word_end: end,
            text: words[start..end].join(" "),
        });
        start = end;
    }
    chunks
}

/// Enumerate the retrievable units of a materialized corpus as
/// `(unit_id, text)` pairs, in a deterministic (id-sorted) order.
pub fn enumerate_units(manifest: &CorpusManifest) -> Result<Vec<(String, String)>, CorpusError> {
    match manifest.layout {
        CorpusLayout::Folder => {
            let mut units = Vec::new();
            let entries =
                fs::read_dir(&manifest.root).map_err(|e| CorpusError::io(&manifest.root, e))?;
            for entry in entries {
                let entry = entry.map_err(|e| CorpusError::io(&manifest.root, e))?;
                let path = entry.path();
                if path.extension().and_then(|e| e.to_str()) != Some("txt") {
                    continue;
                }
                let id = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                let mut text = String::new();
                File::open(&path)
                    .and_then(|mut f| f.read_to_string(&mut text))
                    .map_err(|e| CorpusError::io(&path, e))?;
                units.push((id, text));
            }
            units.sort_by(|a, b| a.0.cmp(&b.0));
            Ok(units)
        }
        CorpusLayout::SingleJson => {
            let data =
                fs::read_to_string(&manifest.root).map_err(|e| CorpusError::io(&manifest.root, e))?;
            let map: serde_json::Map<String, serde_json::Value> = serde_json::from_str(&data)?;
            let mut units: Vec<(String, String)> = map
                .into_iter()
                .map(|(id, v)| (id, v.as_str().unwrap_or_default().to_string()))
                .collect();
            units.sort_by(|a, b| a.0.cmp(&b.0));
            Ok(units)
        }
        CorpusLayout::SingleDoc => {
            let text =
                fs::read_to_string(&manifest.root).map_err(|e| CorpusError::io(&manifest.root, e))?;
            let id = manifest
                .root
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| manifest.name.clone());
            Ok(vec![(id, text)])
        }
        CorpusLayout::Jsonl => {
            let mut units = Vec::new();
            for doc in ingest_jsonl(&manifest.root)? {
                let doc = doc?;
                units.push((doc.id, doc.text));
            }
            units.sort_by(|a, b| a.0.cmp(&b.0));
            Ok(units)
        }
    }
}

/// Fetch one document's text by id from a materialized corpus.
pub fn read_unit(manifest: &CorpusManifest, id: &str) -> Result<Option<String>, CorpusError> {
    match manifest.layout {
        CorpusLayout::Folder => {
            let path = manifest.root.join(format!("{}.txt", sanitize_filename(id)));
            if !path.exists() {
                return Ok(None);
            }
            fs::read_to_string(&path)
                .map(Some)
                .map_err(|e| CorpusError::io(&path, e))
        }
        _ => {
            let units = enumerate_units(manifest)?;
            Ok(units.into_iter().find(|(uid, _)| uid == id).map(|(_, t)| t))
        }
    }
}
