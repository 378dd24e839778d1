//! File-backed candidate pools.
//!
//! Pools carry externally produced candidate texts (paraphrases, generated
//! evidence, replacement tokens) keyed by sentence ref, by key-plus-position,
//! or by prompt hash. One JSON record per line, UTF-8, texts byte-exact.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::SentenceRef;
use crate::error::{Error, Result};
use crate::text::fnv1a64;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CandidatePool {
    entries: BTreeMap<String, Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct PoolRecord {
    key: String,
    candidates: Vec<String>,
}

impl CandidatePool {
    pub fn new() -> Self {
        Self::default()
    }

    /// Key for candidates attached to a whole sentence: `doc_id#index`.
    pub fn sentence_key(sref: &SentenceRef) -> String {
        sref.to_string()
    }

    /// Key for per-position replacement candidates: `doc_id#index@position`.
    pub fn position_key(sref: &SentenceRef, position: usize) -> String {
        format!("{sref}@{position}")
    }

    /// Key for candidates generated from a free-text prompt: `h:<fnv64 hex>`.
    pub fn prompt_key(prompt: &str) -> String {
        format!("h:{:016x}", fnv1a64(prompt.as_bytes()))
    }

    pub fn insert(&mut self, key: impl Into<String>, candidates: Vec<String>) {
        self.entries.insert(key.into(), candidates);
    }

    pub fn get(&self, key: &str) -> Option<&[String]> {
        self.entries.get(key).map(Vec::as_slice)
    }

    pub fn require(&self, key: &str) -> Result<&[String]> {
        self.get(key).ok_or_else(|| Error::MissingPoolKey(key.to_string()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let mut pool = CandidatePool::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record: PoolRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: lineno + 1,
                message: e.to_string(),
            })?;
            pool.entries.insert(record.key, record.candidates);
        }
        Ok(pool)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = std::fs::File::create(path)?;
        for (key, candidates) in &self.entries {
            let record = PoolRecord { key: key.clone(), candidates: candidates.clone() };
            writeln!(out, "{}", serde_json::to_string(&record)?)?;
        }
        Ok(())
    }
}
