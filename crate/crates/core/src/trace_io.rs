//! Per-sample result files. Every processed sample gets one JSON document in
//! the trace directory, either a full reduction trace or a failure record, so
//! reports can be rebuilt from the directory alone.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ddmin::{ReductionTrace, TraceStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FailureStage {
    Lex,
    Reduce,
    Model,
}

/// A sample that never produced a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FailedSample {
    pub source_id: String,
    pub stage: FailureStage,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SampleOutcome {
    Reduced(ReductionTrace),
    Failed(FailedSample),
}

impl SampleOutcome {
    pub fn source_id(&self) -> &str {
        match self {
            SampleOutcome::Reduced(t) => &t.source_id,
            SampleOutcome::Failed(f) => &f.source_id,
        }
    }

    /// Complete traces are the only ones that enter the corpus statistics.
    pub fn complete_trace(&self) -> Option<&ReductionTrace> {
        match self {
            SampleOutcome::Reduced(t) if t.status == TraceStatus::Complete => Some(t),
            _ => None,
        }
    }

    pub fn is_failure(&self) -> bool {
        self.complete_trace().is_none()
    }
}

#[derive(Debug, Error)]
pub enum TraceIoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

/// File name for a sample: the id with every byte outside `[A-Za-z0-9._-]`
/// percent-encoded. Distinct ids map to distinct names.
pub fn file_name_for(source_id: &str) -> String {
    let mut name = String::with_capacity(source_id.len() + 5);
    for b in source_id.bytes() {
        if b.is_ascii_alphanumeric() || matches!(b, b'.' | b'_' | b'-') {
            name.push(b as char);
        } else {
            name.push_str(&format!("%{b:02X}"));
        }
    }
    // never "." or ".."
    if name.starts_with('.') {
        name.replace_range(0..1, "%2E");
    }
    name.push_str(".json");
    name
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("value serializes");
    bytes.push(b'\n');
    bytes
}

pub fn write_outcome(dir: &Path, outcome: &SampleOutcome) -> Result<PathBuf, TraceIoError> {
    let path = dir.join(file_name_for(outcome.source_id()));
    fs::write(&path, to_json_bytes(outcome)).map_err(|source| TraceIoError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

pub fn read_outcome(path: &Path) -> Result<SampleOutcome, TraceIoError> {
    let bytes = fs::read(path).map_err(|source| TraceIoError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_slice(&bytes).map_err(|source| TraceIoError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads every `*.json` file in `dir`, ordered by source id.
pub fn read_outcomes(dir: &Path) -> Result<Vec<SampleOutcome>, TraceIoError> {
    let entries = fs::read_dir(dir).map_err(|source| TraceIoError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut outcomes = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| TraceIoError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let path = entry.path();
        if path.extension().is_some_and(|e| e == "json") && path.is_file() {
            outcomes.push(read_outcome(&path)?);
        }
    }
    outcomes.sort_by(|a, b| a.source_id().cmp(b.source_id()));
    Ok(outcomes)
}
