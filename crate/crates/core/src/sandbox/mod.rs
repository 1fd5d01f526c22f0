//! Isolated test-suite execution in disposable project copies.
//!
//! A [`Worktree`] is a temporary directory holding a full copy of a project
//! (no links back into the source) with the suite's report and logs written
//! beside it, outside the copy. [`SandboxRunner`] caps how many worktrees
//! exist at once; a worktree holds its slot until dropped.

mod process;
mod report;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use log::{debug, warn};
use thiserror::Error;
use walkdir::WalkDir;

use crate::corpus::ProjectManifest;
use crate::sync::{Permit, Semaphore};

pub use process::{run as run_process, ProcessOutcome, ProcessSpec};
pub use report::{reports_differ, CoveredLine, Outcome, ShimReport, ShimTest, TestCase, TestReport, SHIM_SCHEMA_VERSION};

/// File name the shim is vendored under inside every worktree.
pub const SHIM_FILE_NAME: &str = "rtc_shim.py";

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(300);

/// Directory names never copied into a worktree.
const SKIP_DIRS: &[&str] = &[".git", "__pycache__", ".pytest_cache", ".mypy_cache", ".hg", ".svn"];

#[derive(Debug, Error)]
pub enum SandboxError {
    #[error("cannot read project at {path}: {source}")]
    Source { path: PathBuf, source: std::io::Error },
    #[error("worktree I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("bootstrap command `{command}` failed with status {status}: {stderr}")]
    Bootstrap { command: String, status: i32, stderr: String },
    #[error("span {start}..{end} is out of bounds for {file} ({len} bytes)")]
    SpanOutOfBounds { file: PathBuf, start: usize, end: usize, len: usize },
    #[error("span {start}..{end} does not fall on character boundaries of {file}")]
    SpanNotOnBoundary { file: PathBuf, start: usize, end: usize },
    #[error("{file} already has a splice overlapping {start}..{end}")]
    OverlappingSplice { file: PathBuf, start: usize, end: usize },
    #[error("path {0} escapes the worktree")]
    PathEscapes(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    ReportOnly,
    WithCoverage,
}

impl RunMode {
    pub fn as_arg(self) -> &'static str {
        match self {
            RunMode::ReportOnly => "report_only",
            RunMode::WithCoverage => "with_coverage",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandboxConfig {
    /// Maximum number of worktrees alive at once.
    pub max_parallel: usize,
    pub timeout: Duration,
    /// RLIMIT_CPU for suite processes; derived from `timeout` when `None`.
    pub cpu_limit_seconds: Option<u64>,
    /// Best-effort network isolation through `unshare -rn`.
    pub no_network: bool,
    /// Parent directory for worktrees; the system temp dir when `None`.
    pub scratch_dir: Option<PathBuf>,
}

impl Default for SandboxConfig {
    fn default() -> Self {
        Self {
            max_parallel: std::thread::available_parallelism().map_or(4, |n| n.get()),
            timeout: DEFAULT_TIMEOUT,
            cpu_limit_seconds: None,
            no_network: false,
            scratch_dir: None,
        }
    }
}

/// Disposable copy of one project. Deleted when dropped.
pub struct Worktree<'r> {
    id: String,
    parent_project: String,
    dirty: bool,
    project_dir: PathBuf,
    splices: BTreeMap<PathBuf, Vec<(usize, usize)>>,
    root: tempfile::TempDir,
    _permit: Permit<'r>,
}

impl Worktree<'_> {
    pub fn id(&self) -> &str {
        &self.id
    }

    /// Root of the project copy; suites run here.
    pub fn path(&self) -> &Path {
        &self.project_dir
    }

    pub fn parent_project(&self) -> &str {
        &self.parent_project
    }

    pub fn is_dirty(&self) -> bool {
        self.dirty
    }

    fn report_path(&self) -> PathBuf {
        self.root.path().join("report.json")
    }

    fn resolve(&self, relative: &Path) -> Result<PathBuf, SandboxError> {
        if relative.is_absolute()
            || relative
                .components()
                .any(|c| matches!(c, std::path::Component::ParentDir))
        {
            return Err(SandboxError::PathEscapes(relative.to_path_buf()));
        }
        Ok(self.project_dir.join(relative))
    }

    pub fn read_file(&self, relative: &Path) -> Result<Vec<u8>, SandboxError> {
        Ok(std::fs::read(self.resolve(relative)?)?)
    }

    pub fn write_file(&mut self, relative: &Path, contents: &[u8]) -> Result<(), SandboxError> {
        let path = self.resolve(relative)?;
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, contents)?;
        self.dirty = true;
        Ok(())
    }

    /// Replaces bytes `start..end` of `file` with `replacement`.
    pub fn apply_splice(
        &mut self,
        file: &Path,
        (start, end): (usize, usize),
        replacement: &str,
    ) -> Result<(), SandboxError> {
        let bytes = self.read_file(file)?;
        if start > end || end > bytes.len() {
            return Err(SandboxError::SpanOutOfBounds {
                file: file.to_path_buf(),
                start,
                end,
                len: bytes.len(),
            });
        }
        if let Ok(text) = std::str::from_utf8(&bytes) {
            if !text.is_char_boundary(start) || !text.is_char_boundary(end) {
                return Err(SandboxError::SpanNotOnBoundary {
                    file: file.to_path_buf(),
                    start,
                    end,
                });
            }
        }
        let previous = self.splices.entry(file.to_path_buf()).or_default();
        if previous.iter().any(|&(s, e)| start < e && s < end) {
            return Err(SandboxError::OverlappingSplice {
                file: file.to_path_buf(),
                start,
                end,
            });
        }
        previous.push((start, end));
        let mut out = Vec::with_capacity(bytes.len() - (end - start) + replacement.len());
        out.extend_from_slice(&bytes[..start]);
        out.extend_from_slice(replacement.as_bytes());
        out.extend_from_slice(&bytes[end..]);
        self.write_file(file, &out)
    }
}

fn copy_tree(src: &Path, dst: &Path) -> Result<(), SandboxError> {
    let source_err = |e: std::io::Error| SandboxError::Source {
        path: src.to_path_buf(),
        source: e,
    };
    std::fs::create_dir_all(dst)?;
    let walker = WalkDir::new(src).follow_links(true).into_iter().filter_entry(|e| {
        !(e.file_type().is_dir() && SKIP_DIRS.iter().any(|d| e.file_name() == *d))
    });
    for entry in walker {
        let entry = entry.map_err(|e| source_err(e.into()))?;
        let rel = entry.path().strip_prefix(src).expect("walkdir yields children of its root");
        if rel.as_os_str().is_empty() {
            continue;
        }
        let target = dst.join(rel);
        if entry.file_type().is_dir() {
            std::fs::create_dir_all(&target)?;
        } else if entry.file_type().is_file() {
            std::fs::copy(entry.path(), &target).map_err(source_err)?;
        }
    }
    Ok(())
}

/// Shared, thread-safe owner of all worktrees and suite runs.
pub struct SandboxRunner {
    config: SandboxConfig,
    slots: Semaphore,
    counter: AtomicUsize,
}

impl SandboxRunner {
    pub fn new(config: SandboxConfig) -> Self {
        let slots = Semaphore::new(config.max_parallel);
        Self {
            config,
            slots,
            counter: AtomicUsize::new(0),
        }
    }

    pub fn config(&self) -> &SandboxConfig {
        &self.config
    }

    /// Largest number of worktrees that were alive at the same time.
    pub fn peak_worktrees(&self) -> usize {
        self.slots.peak()
    }

    pub fn worktrees_in_use(&self) -> usize {
        self.slots.in_use()
    }

    fn fresh(&self, project_id: &str) -> Result<Worktree<'_>, SandboxError> {
        let permit = self.slots.acquire();
        let n = self.counter.fetch_add(1, Ordering::Relaxed);
        let id = format!("{project_id}-{n}");
        let mut builder = tempfile::Builder::new();
        builder.prefix("rtc-wt-");
        let root = match &self.config.scratch_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                builder.tempdir_in(dir)?
            }
            None => builder.tempdir()?,
        };
        let project_dir = root.path().join("project");
        std::fs::create_dir_all(&project_dir)?;
        std::fs::create_dir_all(root.path().join("home"))?;
        std::fs::create_dir_all(root.path().join("tmp"))?;
        Ok(Worktree {
            id,
            parent_project: project_id.to_string(),
            dirty: false,
            project_dir,
            splices: BTreeMap::new(),
            root,
            _permit: permit,
        })
    }

    /// Empty worktree, for programs that are not part of a project.
    pub fn scratch_worktree(&self, label: &str) -> Result<Worktree<'_>, SandboxError> {
        self.fresh(label)
    }

    /// Fresh copy of the project, with the shim vendored and the bootstrap
    /// command (if any) already run. Blocks while the worktree cap is reached.
    pub fn acquire_worktree(&self, project: &ProjectManifest) -> Result<Worktree<'_>, SandboxError> {
        let wt = self.fresh(&project.project_id)?;
        copy_tree(&project.root_path, &wt.project_dir)?;
        if let Some(shim) = &project.shim_path {
            std::fs::copy(shim, wt.project_dir.join(SHIM_FILE_NAME)).map_err(|e| SandboxError::Source {
                path: shim.clone(),
                source: e,
            })?;
        }
        if let Some(bootstrap) = &project.bootstrap_command {
            let out = self.run_raw(&wt, bootstrap, self.config.timeout)?;
            if out.timed_out || out.exit_status != 0 {
                return Err(SandboxError::Bootstrap {
                    command: bootstrap.clone(),
                    status: out.exit_status,
                    stderr: out.stderr_tail,
                });
            }
        }
        debug!("acquired worktree {} at {}", wt.id, wt.project_dir.display());
        Ok(wt)
    }

    fn env(&self, wt: &Worktree<'_>) -> Vec<(String, String)> {
        let path = |p: &str| wt.root.path().join(p).to_string_lossy().into_owned();
        vec![
            ("HOME".into(), path("home")),
            ("TMPDIR".into(), path("tmp")),
            ("PYTHONDONTWRITEBYTECODE".into(), "1".into()),
            ("PYTHONHASHSEED".into(), "0".into()),
        ]
    }

    /// Runs an arbitrary shell command from the project root of `wt`.
    pub fn run_raw(
        &self,
        wt: &Worktree<'_>,
        shell_command: &str,
        timeout: Duration,
    ) -> Result<ProcessOutcome, SandboxError> {
        let cpu = self
            .config
            .cpu_limit_seconds
            .unwrap_or_else(|| timeout.as_secs().saturating_add(1).max(1));
        Ok(run_process(&ProcessSpec {
            shell_command,
            cwd: &wt.project_dir,
            env: self.env(wt),
            timeout,
            cpu_limit_seconds: Some(cpu),
            no_network: self.config.no_network,
            log_dir: wt.root.path(),
        })?)
    }

    /// Runs `<test_command> --mode <mode> --out <report>` and parses the shim report.
    ///
    /// Launch failures, missing reports, and malformed reports all come back
    /// as a report with `shim_error` set rather than as an `Err`.
    pub fn run_suite(&self, wt: &Worktree<'_>, test_command: &str, mode: RunMode, timeout: Duration) -> TestReport {
        let report_path = wt.report_path();
        let _ = std::fs::remove_file(&report_path);
        let command = format!(
            "{test_command} --mode {} --out '{}'",
            mode.as_arg(),
            report_path.display()
        );
        let broken = |exit_status: i32, wall: f64, timed_out: bool, why: String| TestReport {
            tests: Vec::new(),
            exit_status,
            collected: 0,
            wall_time_seconds: wall,
            timed_out,
            shim_error: Some(why),
            coverage: None,
        };
        let out = match self.run_raw(wt, &command, timeout) {
            Ok(out) => out,
            Err(e) => return broken(-1, 0.0, false, format!("could not launch suite: {e}")),
        };
        let wall = out.wall_time.as_secs_f64();
        if out.timed_out {
            warn!("{}: suite timed out after {:.1}s", wt.id, wall);
            return broken(out.exit_status, wall, true, "timed out".into());
        }
        let text = match std::fs::read_to_string(&report_path) {
            Ok(t) => t,
            Err(e) => {
                return broken(
                    out.exit_status,
                    wall,
                    false,
                    format!("no shim report ({e}); stderr: {}", out.stderr_tail.trim()),
                )
            }
        };
        match ShimReport::parse(&text) {
            Ok(shim) => shim.into_test_report(out.exit_status, wall),
            Err(why) => broken(out.exit_status, wall, false, why),
        }
    }

    pub fn run_tests(&self, wt: &Worktree<'_>, test_command: &str) -> TestReport {
        self.run_suite(wt, test_command, RunMode::ReportOnly, self.config.timeout)
    }

    pub fn run_tests_with_coverage(&self, wt: &Worktree<'_>, test_command: &str) -> TestReport {
        self.run_suite(wt, test_command, RunMode::WithCoverage, self.config.timeout)
    }
}
