//! Per-project weighted sampling with coverage and deletion-mutant filters.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use super::context::{build_context, CONTEXT_BUDGET};
use super::coverage::{coverage_filter, CoverageMap};
use super::enumerate::{assign_weights, enumerate_file, CandidateRange, MAX_CHARS, MIN_CHARS};
use super::manifest::ProjectManifest;
use super::mutation::mutation_filter;
use super::{CorpusError, RegionTask};
use crate::sandbox::{reports_differ, SandboxRunner, TestReport, SHIM_FILE_NAME};

pub const TIMEOUT_FLAG: &str = "mutant_timeout";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub seed: u64,
    pub per_project: usize,
    pub min_accept: usize,
    pub min_chars: usize,
    pub max_chars: usize,
    pub context_budget: usize,
    /// Pristine runs that must agree before sampling starts.
    pub baseline_runs: usize,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            per_project: 100,
            min_accept: 80,
            min_chars: MIN_CHARS,
            max_chars: MAX_CHARS,
            context_budget: CONTEXT_BUDGET,
            baseline_runs: 3,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub project_id: String,
    pub files_parsed: usize,
    /// `(file, reason)` for files that were not enumerated.
    pub files_skipped: Vec<(String, String)>,
    pub candidates_enumerated: usize,
    pub drawn: usize,
    pub coverage_rejected: usize,
    pub mutation_rejected: usize,
    pub mutant_timeouts: usize,
    pub accepted: usize,
    /// `accepted / drawn`, or 0 when nothing was drawn.
    pub acceptance_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejected: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RejectReason {
    TooFewAccepted { accepted: usize, min_accept: usize },
    FlakyBaseline { detail: String },
}

impl std::fmt::Display for RejectReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RejectReason::TooFewAccepted { accepted, min_accept } => {
                write!(f, "only {accepted} tasks accepted, {min_accept} required")
            }
            RejectReason::FlakyBaseline { detail } => write!(f, "baseline runs disagree: {detail}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SampleOutcome {
    Accepted { tasks: Vec<RegionTask>, stats: CorpusStats },
    Rejected { reason: RejectReason, stats: CorpusStats },
}

impl SampleOutcome {
    pub fn stats(&self) -> &CorpusStats {
        match self {
            SampleOutcome::Accepted { stats, .. } | SampleOutcome::Rejected { stats, .. } => stats,
        }
    }

    pub fn tasks(&self) -> &[RegionTask] {
        match self {
            SampleOutcome::Accepted { tasks, .. } => tasks,
            SampleOutcome::Rejected { .. } => &[],
        }
    }
}

/// Every in-range candidate of a project, weighted, plus the file texts.
#[derive(Debug, Clone, Default)]
pub struct ProjectPool {
    pub candidates: Vec<CandidateRange>,
    pub texts: BTreeMap<PathBuf, String>,
    pub files_parsed: usize,
    pub files_skipped: Vec<(String, String)>,
}

fn relative_slash(path: &Path) -> String {
    path.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

/// Source files of the project (test files excluded), sorted.
pub fn source_files(manifest: &ProjectManifest) -> Result<Vec<PathBuf>, CorpusError> {
    let filter = manifest.file_filter().map_err(|message| CorpusError::Manifest {
        path: manifest.root_path.clone(),
        message,
    })?;
    let mut files = Vec::new();
    let walker = WalkDir::new(&manifest.root_path)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|e| !(e.file_type().is_dir() && e.depth() > 0 && e.file_name().to_string_lossy().starts_with('.')));
    for entry in walker {
        let entry = entry.map_err(|e| CorpusError::Io(e.into()))?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry
            .path()
            .strip_prefix(&manifest.root_path)
            .expect("walkdir yields children of its root");
        let slash = relative_slash(rel);
        if slash == SHIM_FILE_NAME || slash.split('/').any(|c| c == "__pycache__") {
            continue;
        }
        if filter.is_source_file(&slash) {
            files.push(rel.to_path_buf());
        }
    }
    Ok(files)
}

/// Enumerates and weights every source file of the project. Files that are
/// not UTF-8 or do not parse are skipped and listed.
pub fn enumerate_project(manifest: &ProjectManifest, min_chars: usize, max_chars: usize) -> Result<ProjectPool, CorpusError> {
    let files = source_files(manifest)?;
    let per_file: Vec<(PathBuf, Result<(String, Vec<CandidateRange>), String>)> = files
        .par_iter()
        .map(|rel| {
            let result = std::fs::read(manifest.root_path.join(rel))
                .map_err(|e| e.to_string())
                .and_then(|bytes| String::from_utf8(bytes).map_err(|_| "not UTF-8".to_string()))
                .and_then(|text| {
                    enumerate_file(rel, &text, min_chars, max_chars)
                        .map(|c| (text, c))
                        .map_err(|e| e.to_string())
                });
            (rel.clone(), result)
        })
        .collect();
    let mut pool = ProjectPool::default();
    for (rel, result) in per_file {
        match result {
            Ok((text, mut cands)) => {
                assign_weights(&mut cands);
                pool.files_parsed += 1;
                pool.candidates.extend(cands);
                pool.texts.insert(rel, text);
            }
            Err(reason) => {
                warn!("{}: skipping {}: {reason}", manifest.project_id, rel.display());
                pool.files_skipped.push((relative_slash(&rel), reason));
            }
        }
    }
    Ok(pool)
}

/// Order in which weighted sampling without replacement draws the items:
/// item `i` gets key `ln(u_i) / w_i` with `u_i` uniform in (0, 1], and items
/// are drawn by decreasing key. Ties break on index.
pub fn draw_order(weights: &[f64], seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keyed: Vec<(f64, usize)> = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let u = 1.0 - rng.random::<f64>();
            (u.ln() / w, i)
        })
        .collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    keyed.into_iter().map(|(_, i)| i).collect()
}

pub struct Baseline {
    pub report: TestReport,
    pub coverage: CoverageMap,
}

/// Runs the pristine suite `runs` times (the first with coverage). Errors if
/// the first run does not pass; `Ok(Err(_))` if later runs disagree with it.
pub fn run_baseline(
    manifest: &ProjectManifest,
    runner: &SandboxRunner,
    runs: usize,
) -> Result<Result<Baseline, RejectReason>, CorpusError> {
    let wt = runner.acquire_worktree(manifest)?;
    let first = runner.run_tests_with_coverage(&wt, &manifest.test_command);
    if !first.all_pass() {
        return Err(CorpusError::BaselineFailing {
            project_id: manifest.project_id.clone(),
            detail: match &first.shim_error {
                Some(e) => e.clone(),
                None if first.collected == 0 => "no tests collected".into(),
                None => format!("failing tests: {}", first.failing_ids().join(", ")),
            },
        });
    }
    for run in 1..runs.max(1) {
        let again = runner.run_tests(&wt, &manifest.test_command);
        if reports_differ(&first, &again) {
            return Ok(Err(RejectReason::FlakyBaseline {
                detail: format!("run {} differs from run 1", run + 1),
            }));
        }
    }
    let coverage = CoverageMap::from_report(&first);
    Ok(Ok(Baseline { report: first, coverage }))
}

pub fn task_id(project_id: &str, file: &Path, (start, end): (usize, usize)) -> String {
    format!("{project_id}/{}:{start}-{end}", relative_slash(file))
}

fn make_task(manifest: &ProjectManifest, c: &CandidateRange, text: &str, budget: usize, flags: Vec<String>) -> RegionTask {
    let (context_before, context_after) = build_context(text, c.byte_span, budget);
    RegionTask {
        task_id: task_id(&manifest.project_id, &c.file, c.byte_span),
        project_id: manifest.project_id.clone(),
        file: PathBuf::from(relative_slash(&c.file)),
        byte_span: c.byte_span,
        region_text: text[c.byte_span.0..c.byte_span.1].to_string(),
        context_before,
        context_after,
        test_command: manifest.test_command.clone(),
        flags,
    }
}

/// Draws candidates in weighted order, keeps those that are covered and whose
/// deletion the suite observes, and stops at `per_project` accepted tasks.
///
/// Mutants are evaluated in batches of the sandbox cap; acceptance follows
/// draw order, so the result depends only on the project and the seed.
pub fn sample_project(
    manifest: &ProjectManifest,
    cfg: &SampleConfig,
    runner: &SandboxRunner,
) -> Result<SampleOutcome, CorpusError> {
    let mut stats = CorpusStats {
        project_id: manifest.project_id.clone(),
        ..Default::default()
    };
    let baseline = match run_baseline(manifest, runner, cfg.baseline_runs)? {
        Ok(b) => b,
        Err(reason) => {
            stats.rejected = Some(reason.to_string());
            return Ok(SampleOutcome::Rejected { reason, stats });
        }
    };
    let pool = enumerate_project(manifest, cfg.min_chars, cfg.max_chars)?;
    stats.files_parsed = pool.files_parsed;
    stats.files_skipped = pool.files_skipped.clone();
    stats.candidates_enumerated = pool.candidates.len();
    let weights: Vec<f64> = pool.candidates.iter().map(CandidateRange::weight_f64).collect();
    let order = draw_order(&weights, cfg.seed);

    let mut tasks = Vec::new();
    let batch = runner.config().max_parallel.max(1);
    let mut cursor = 0;
    while tasks.len() < cfg.per_project && cursor < order.len() {
        // One batch of covered draws, with the uncovered draws between them.
        let mut chunk: Vec<(&CandidateRange, bool)> = Vec::new();
        let mut covered = 0;
        while covered < batch && cursor < order.len() {
            let c = &pool.candidates[order[cursor]];
            cursor += 1;
            let is_covered = coverage_filter(&c.file, &pool.texts[&c.file], c.byte_span, &baseline.coverage);
            covered += usize::from(is_covered);
            chunk.push((c, is_covered));
        }
        let verdicts: Vec<_> = chunk
            .par_iter()
            .map(|&(c, is_covered)| is_covered.then(|| mutation_filter(c, manifest, &baseline.report, runner)))
            .collect();
        for ((c, _), verdict) in chunk.into_iter().zip(verdicts) {
            if tasks.len() >= cfg.per_project {
                break;
            }
            stats.drawn += 1;
            let Some(verdict) = verdict else {
                stats.coverage_rejected += 1;
                continue;
            };
            let verdict = verdict?;
            if verdict.timed_out {
                stats.mutant_timeouts += 1;
            }
            if verdict.keep {
                let flags = if verdict.timed_out { vec![TIMEOUT_FLAG.to_string()] } else { vec![] };
                tasks.push(make_task(manifest, c, &pool.texts[&c.file], cfg.context_budget, flags));
            } else {
                stats.mutation_rejected += 1;
            }
        }
    }
    stats.accepted = tasks.len();
    stats.acceptance_rate = if stats.drawn == 0 {
        0.0
    } else {
        stats.accepted as f64 / stats.drawn as f64
    };
    info!(
        "{}: {} candidates, {} drawn, {} accepted ({:.0}%)",
        manifest.project_id,
        stats.candidates_enumerated,
        stats.drawn,
        stats.accepted,
        100.0 * stats.acceptance_rate
    );
    if tasks.len() < cfg.min_accept {
        let reason = RejectReason::TooFewAccepted {
            accepted: tasks.len(),
            min_accept: cfg.min_accept,
        };
        stats.rejected = Some(reason.to_string());
        return Ok(SampleOutcome::Rejected { reason, stats });
    }
    Ok(SampleOutcome::Accepted { tasks, stats })
}
