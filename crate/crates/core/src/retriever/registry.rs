//! Dataset registry for the standalone retriever CLI.
//!
//! The CLI is invoked from inside agent workspaces with only a dataset name
//! (`--dataset nq`), so something must map names to corpus roots. That map is
//! a small JSON file; resolution order is an explicit path, then the
//! `FSNAV_RETRIEVER_REGISTRY` environment variable, then a
//! `retriever_registry.json` found by walking up from the working directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::RetrieverError;

pub const REGISTRY_FILENAME: &str = "retriever_registry.json";
pub const REGISTRY_ENV: &str = "FSNAV_RETRIEVER_REGISTRY";

/// What retrieval units a dataset exposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    /// Whole documents of a corpus are the units.
    Corpus,
    /// Fixed-size chunks of one long document per datapoint are the units;
    /// queries must carry a datapoint id.
    LongDoc,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub kind: DatasetKind,
    /// Corpus root: a folder, JSON/JSONL file, or (for long-doc datasets)
    /// the directory containing `<datapoint_id>.txt` files.
    pub root: PathBuf,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Registry {
    pub datasets: BTreeMap<String, DatasetEntry>,
}

impl Registry {
    pub fn load(path: &Path) -> Result<Self, RetrieverError> {
        let data = fs::read_to_string(path)?;
        serde_json::from_str(&data).map_err(|e| RetrieverError::Registry {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), RetrieverError> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let json = serde_json::to_string_pretty(self).expect("registry serializes");
        fs::write(path, json)?;
        Ok(())
    }

    pub fn get(&self, dataset: &str) -> Result<&DatasetEntry, RetrieverError> {
        self.datasets
            .get(dataset)
            .ok_or_else(|| RetrieverError::UnknownDataset(dataset.to_string()))
    }

    /// Locate and load the registry. `explicit` wins, then the environment
    /// variable, then the nearest `retriever_registry.json` in `cwd` or any
    /// ancestor directory.
    pub fn discover(explicit: Option<&Path>, cwd: &Path) -> Result<Self, RetrieverError> {
        if let Some(path) = explicit {
            return Self::load(path);
        }
        if let Ok(env_path) = std::env::var(REGISTRY_ENV) {
            if !env_path.is_empty() {
                return Self::load(Path::new(&env_path));
            }
        }
        let mut dir = Some(cwd);
        while let Some(d) = dir {
            let candidate = d.join(REGISTRY_FILENAME);
            if candidate.exists() {
                return Self::load(&candidate);
            }
            dir = d.parent();
        }
        Err(RetrieverError::Registry {
            path: cwd.join(REGISTRY_FILENAME),
            reason: format!(
                "no {REGISTRY_FILENAME} found in working directory or ancestors, \
                 no --registry flag, and {REGISTRY_ENV} unset"
            ),
        })
    }
}
