//! Structured test-suite results and the shim's wire format.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub const SHIM_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    Error,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestCase {
    pub test_id: String,
    pub outcome: Outcome,
    pub duration_seconds: f64,
}

/// `(file relative to the worktree root, 1-based line)`
pub type CoveredLine = (String, usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub tests: Vec<TestCase>,
    pub exit_status: i32,
    pub collected: usize,
    pub wall_time_seconds: f64,
    pub timed_out: bool,
    /// Why no usable shim report was produced, when that happened.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shim_error: Option<String>,
    /// Per-test covered lines, present for coverage runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage: Option<BTreeMap<String, Vec<CoveredLine>>>,
}

impl TestReport {
    pub fn count(&self, outcome: Outcome) -> usize {
        self.tests.iter().filter(|t| t.outcome == outcome).count()
    }

    /// At least one test ran, none failed or errored, and the run completed.
    pub fn all_pass(&self) -> bool {
        !self.timed_out
            && self.shim_error.is_none()
            && self.collected > 0
            && self.count(Outcome::Fail) == 0
            && self.count(Outcome::Error) == 0
    }

    pub fn outcome_multiset(&self) -> BTreeMap<(&str, Outcome), usize> {
        let mut m = BTreeMap::new();
        for t in &self.tests {
            *m.entry((t.test_id.as_str(), t.outcome)).or_insert(0) += 1;
        }
        m
    }

    pub fn failing_ids(&self) -> Vec<&str> {
        self.tests
            .iter()
            .filter(|t| matches!(t.outcome, Outcome::Fail | Outcome::Error))
            .map(|t| t.test_id.as_str())
            .collect()
    }
}

/// True iff the `(test_id, outcome)` multisets or collected counts differ, or
/// either run timed out. A missing shim report on one side only also counts.
pub fn reports_differ(a: &TestReport, b: &TestReport) -> bool {
    a.timed_out
        || b.timed_out
        || a.collected != b.collected
        || a.shim_error.is_some() != b.shim_error.is_some()
        || a.outcome_multiset() != b.outcome_multiset()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShimTest {
    pub id: String,
    pub outcome: Outcome,
    pub duration: f64,
}

/// Document written by `rtc_shim.py --out <path>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShimReport {
    pub schema_version: u32,
    pub tests: Vec<ShimTest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage: Option<BTreeMap<String, Vec<CoveredLine>>>,
    pub collected: usize,
}

impl ShimReport {
    pub fn parse(text: &str) -> Result<Self, String> {
        let report: ShimReport = serde_json::from_str(text).map_err(|e| format!("malformed shim report: {e}"))?;
        if report.schema_version != SHIM_SCHEMA_VERSION {
            return Err(format!(
                "unsupported shim report schema_version {} (expected {SHIM_SCHEMA_VERSION})",
                report.schema_version
            ));
        }
        Ok(report)
    }

    pub fn into_test_report(self, exit_status: i32, wall_time_seconds: f64) -> TestReport {
        TestReport {
            tests: self
                .tests
                .into_iter()
                .map(|t| TestCase {
                    test_id: t.id,
                    outcome: t.outcome,
                    duration_seconds: t.duration,
                })
                .collect(),
            exit_status,
            collected: self.collected,
            wall_time_seconds,
            timed_out: false,
            shim_error: None,
            coverage: self.coverage,
        }
    }
}
