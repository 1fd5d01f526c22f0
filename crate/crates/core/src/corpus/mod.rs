//! Corpus construction: tested project in, sampled [`RegionTask`]s out.
//!
//! Files are parsed into statement lists, every run of consecutive sibling
//! statements within the length bounds becomes a weighted candidate, and
//! candidates are drawn per project and kept only if the suite covers them
//! and notices their deletion.

pub mod context;
pub mod coverage;
pub mod cst;
pub mod enumerate;
mod manifest;
pub mod mutation;
pub mod sample;

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use context::{build_context, CONTEXT_BUDGET};
pub use coverage::{coverage_filter, CoverageMap};
pub use enumerate::{
    assign_weights, containment_count, enumerate_candidates, enumerate_file, sampling_weight, CandidateRange,
    MAX_CHARS, MIN_CHARS,
};
pub use manifest::{FileFilter, Language, ProjectManifest};
pub use mutation::{deletion_replacement, mutation_filter, MutationVerdict};
pub use sample::{draw_order, enumerate_project, sample_project, CorpusStats, RejectReason, SampleConfig, SampleOutcome};

use crate::sandbox::SandboxError;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("project `{project_id}` baseline does not pass: {detail}")]
    BaselineFailing { project_id: String, detail: String },
    #[error(transparent)]
    Sandbox(#[from] SandboxError),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },
}

/// One sampled region with its context and the suite that tests it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionTask {
    /// `{project_id}/{file}:{start}-{end}`
    pub task_id: String,
    pub project_id: String,
    /// Relative to the project root, `/`-separated.
    pub file: PathBuf,
    pub byte_span: (usize, usize),
    pub region_text: String,
    pub context_before: String,
    pub context_after: String,
    pub test_command: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl RegionTask {
    /// Indentation of the region's first line.
    pub fn indent(&self) -> &str {
        crate::text::leading_indent(&self.region_text)
    }
}

/// Writes one JSON document per line.
pub fn write_jsonl<T: Serialize, W: Write>(items: &[T], mut out: W) -> std::io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut out, item)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Reads one JSON document per non-blank line.
pub fn read_jsonl<T: DeserializeOwned, R: BufRead>(input: R) -> Result<Vec<T>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| CorpusError::Record {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn read_jsonl_file<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CorpusError> {
    let file = std::fs::File::open(path)?;
    read_jsonl(std::io::BufReader::new(file))
}
