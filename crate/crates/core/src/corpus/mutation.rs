//! Deletion mutants: remove a candidate and see whether the suite notices.

use log::warn;

use super::enumerate::CandidateRange;
use super::manifest::ProjectManifest;
use crate::sandbox::{reports_differ, SandboxError, SandboxRunner, TestReport};

/// Placeholder statement that keeps an emptied block well-formed.
pub const PYTHON_NOOP: &str = "pass";

/// Text that replaces the candidate's span in the mutant.
pub fn deletion_replacement(candidate: &CandidateRange) -> String {
    if candidate.fills_block {
        format!("{}{PYTHON_NOOP}", candidate.indent)
    } else {
        String::new()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MutationVerdict {
    pub keep: bool,
    pub timed_out: bool,
    pub report: TestReport,
}

/// Runs the suite on a deletion mutant of `candidate` and compares the result
/// with `baseline`. A timeout counts as an observable effect.
pub fn mutation_filter(
    candidate: &CandidateRange,
    manifest: &ProjectManifest,
    baseline: &TestReport,
    runner: &SandboxRunner,
) -> Result<MutationVerdict, SandboxError> {
    let mut wt = runner.acquire_worktree(manifest)?;
    wt.apply_splice(&candidate.file, candidate.byte_span, &deletion_replacement(candidate))?;
    let report = runner.run_tests(&wt, &manifest.test_command);
    if report.timed_out {
        warn!(
            "{}: deletion mutant of {}:{}-{} timed out; keeping it",
            manifest.project_id,
            candidate.file.display(),
            candidate.byte_span.0,
            candidate.byte_span.1
        );
    }
    Ok(MutationVerdict {
        keep: reports_differ(baseline, &report),
        timed_out: report.timed_out,
        report,
    })
}
