//! Corpus ingestion: a directory of source files or a JSONL file of
//! `{"id", "code", "label"?}` objects, optionally subsampled with a seed.

use std::collections::HashSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

use crate::tokens::Language;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSample {
    #[serde(rename = "id")]
    pub source_id: String,
    pub code: String,
    /// Informational only; the reduction never looks at it.
    #[serde(default, rename = "label", skip_serializing_if = "Option::is_none")]
    pub expected_label: Option<String>,
}

/// A corpus entry that could not be read.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestFailure {
    /// `file:line` for JSONL, the file path for directory corpora.
    pub location: String,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct Ingested {
    /// Ordered by source id.
    pub samples: Vec<CorpusSample>,
    pub failures: Vec<IngestFailure>,
    /// Readable samples before subsampling.
    pub corpus_size: usize,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("corpus path `{0}` does not exist")]
    MissingPath(PathBuf),
    #[error("reading corpus `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("sample count must be at least 1")]
    ZeroSampleCount,
}

pub fn ingest(
    path: &Path,
    language: Language,
    sample_count: Option<usize>,
    seed: u64,
) -> Result<Ingested, IngestError> {
    if sample_count == Some(0) {
        return Err(IngestError::ZeroSampleCount);
    }
    if !path.exists() {
        return Err(IngestError::MissingPath(path.to_path_buf()));
    }
    let mut ingested = if path.is_dir() {
        read_directory(path, language)?
    } else {
        read_jsonl(path)?
    };
    ingested
        .samples
        .sort_by(|a, b| a.source_id.cmp(&b.source_id));
    ingested.corpus_size = ingested.samples.len();
    if let Some(k) = sample_count {
        ingested.samples = subsample(ingested.samples, k, seed);
    }
    Ok(ingested)
}

/// Seeded uniform sampling without replacement; the result keeps id order.
pub fn subsample(samples: Vec<CorpusSample>, k: usize, seed: u64) -> Vec<CorpusSample> {
    if k >= samples.len() {
        return samples;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, samples.len(), k).into_vec();
    picked.sort_unstable();
    let mut picked = picked.into_iter().peekable();
    samples
        .into_iter()
        .enumerate()
        .filter_map(|(i, s)| {
            if picked.peek() == Some(&i) {
                picked.next();
                Some(s)
            } else {
                None
            }
        })
        .collect()
}

fn read_directory(root: &Path, language: Language) -> Result<Ingested, IngestError> {
    let mut out = Ingested::default();
    let extensions = language.extensions();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| IngestError::Io {
            path: root.to_path_buf(),
            source: e.into(),
        })?;
        let path = entry.path();
        let matches = entry.file_type().is_file()
            && path
                .extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| extensions.contains(&e));
        if !matches {
            continue;
        }
        let id = path
            .strip_prefix(root)
            .unwrap_or(path)
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        match fs::read(path) {
            Ok(bytes) => match String::from_utf8(bytes) {
                Ok(code) => out.samples.push(CorpusSample {
                    source_id: id,
                    code,
                    expected_label: None,
                }),
                Err(_) => out.failures.push(IngestFailure {
                    location: path.display().to_string(),
                    message: "file is not valid UTF-8".into(),
                }),
            },
            Err(e) => out.failures.push(IngestFailure {
                location: path.display().to_string(),
                message: e.to_string(),
            }),
        }
    }
    Ok(out)
}

fn read_jsonl(path: &Path) -> Result<Ingested, IngestError> {
    let text = fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = Ingested::default();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let location = format!("{}:{}", path.display(), i + 1);
        match serde_json::from_str::<CorpusSample>(line) {
            Ok(sample) if !seen.insert(sample.source_id.clone()) => {
                out.failures.push(IngestFailure {
                    location,
                    message: format!("duplicate id `{}`", sample.source_id),
                })
            }
            Ok(sample) => out.samples.push(sample),
            Err(e) => out.failures.push(IngestFailure {
                location,
                message: e.to_string(),
            }),
        }
    }
    Ok(out)
}

/// Serializes samples as JSONL in the ingest format.
pub fn to_jsonl(samples: &[CorpusSample]) -> String {
    let mut out = String::new();
    for s in samples {
        out.push_str(&serde_json::to_string(s).expect("sample serializes"));
        out.push('\n');
    }
    out
}
