//! Worktree isolation and suite execution against the fixture projects.

mod common;

use std::path::Path;
use std::time::{Duration, Instant};

use rtc_core::sandbox::{Outcome, RunMode, SHIM_FILE_NAME};

fn tree_hash(root: &Path, extra: &[&str]) -> String {
    let mut args = vec![root.to_str().unwrap(), "--skip", "__pycache__", "--skip", ".git"];
    args.extend_from_slice(extra);
    common::python_oracle("tree_hash.py", &args, None).trim().to_string()
}

/// Test ids as the standard unittest loader lists them, without running anything.
fn listed_test_ids(root: &Path) -> Vec<String> {
    let script = r#"
import unittest


def walk(suite):
    for t in suite:
        if isinstance(t, unittest.TestSuite):
            yield from walk(t)
        else:
            yield t.id()


for i in sorted(walk(unittest.defaultTestLoader.discover(".", pattern="test*.py", top_level_dir="."))):
    print(i)
"#;
    let out = std::process::Command::new("python3")
        .args(["-B", "-c", script])
        .current_dir(root)
        .output()
        .unwrap();
    assert!(out.status.success());
    String::from_utf8(out.stdout).unwrap().lines().map(String::from).collect()
}

#[test]
fn worktree_is_a_faithful_copy_plus_the_shim() {
    let m = common::manifest("calc");
    let runner = common::runner(1);
    let wt = runner.acquire_worktree(&m).unwrap();
    assert_eq!(tree_hash(&m.root_path, &[]), tree_hash(wt.path(), &["--skip-file", SHIM_FILE_NAME]));
    let shim = std::fs::read(wt.path().join(SHIM_FILE_NAME)).unwrap();
    assert_eq!(shim, std::fs::read(common::fixture("rtc_shim.py")).unwrap());
    assert!(!wt.is_dirty());
}

#[test]
fn pristine_report_lists_every_test_as_passing() {
    let m = common::manifest("calc");
    let runner = common::runner(1);
    let wt = runner.acquire_worktree(&m).unwrap();
    let report = runner.run_tests(&wt, &m.test_command);
    let mut ids: Vec<String> = report.tests.iter().map(|t| t.test_id.clone()).collect();
    ids.sort();
    let expected = listed_test_ids(&m.root_path);
    assert_eq!(expected.len(), 9);
    assert_eq!(ids, expected);
    assert_eq!(report.collected, 9);
    assert!(report.all_pass() && !report.timed_out && report.shim_error.is_none());
}

#[test]
fn injected_failure_is_reported_by_id() {
    let m = common::manifest("calc");
    let runner = common::runner(1);
    let mut wt = runner.acquire_worktree(&m).unwrap();
    wt.write_file(
        Path::new("tests/test_injected.py"),
        b"import unittest\n\n\nclass Injected(unittest.TestCase):\n    def test_broken(self):\n        self.assertEqual(1, 2)\n",
    )
    .unwrap();
    assert!(wt.is_dirty());
    let report = runner.run_tests(&wt, &m.test_command);
    assert_eq!(report.failing_ids(), vec!["tests.test_injected.Injected.test_broken"]);
    assert_eq!(report.count(Outcome::Pass), 9);
}

#[test]
fn source_mutation_fails_exactly_the_dependent_tests() {
    let m = common::manifest("calc");
    let runner = common::runner(1);
    let mut wt = runner.acquire_worktree(&m).unwrap();
    let text = std::fs::read_to_string(m.root_path.join("calc/stats.py")).unwrap();
    let needle = "    return (ordered[middle - 1] + ordered[middle]) / 2";
    let start = text.find(needle).unwrap();
    wt.apply_splice(Path::new("calc/stats.py"), (start, start + needle.len()), "    return 0")
        .unwrap();
    let report = runner.run_tests(&wt, &m.test_command);
    assert_eq!(report.failing_ids(), vec!["tests.test_stats.SpreadTest.test_median_even"]);
}

#[test]
fn slow_suite_times_out() {
    let m = common::manifest("calc");
    let runner = common::runner(1);
    let mut wt = runner.acquire_worktree(&m).unwrap();
    wt.write_file(
        Path::new("tests/test_slow.py"),
        b"import time\nimport unittest\n\n\nclass Slow(unittest.TestCase):\n    def test_sleep(self):\n        time.sleep(30)\n",
    )
    .unwrap();
    let started = Instant::now();
    let report = runner.run_suite(&wt, &m.test_command, RunMode::ReportOnly, Duration::from_millis(10));
    assert!(report.timed_out);
    assert!(!report.all_pass());
    assert!(started.elapsed() < Duration::from_secs(20));
}

#[test]
fn worktree_cap_is_never_exceeded() {
    let m = common::manifest("five");
    let runner = common::runner(2);
    std::thread::scope(|s| {
        for _ in 0..6 {
            s.spawn(|| {
                let wt = runner.acquire_worktree(&m).unwrap();
                assert!(runner.worktrees_in_use() <= 2);
                let report = runner.run_tests(&wt, &m.test_command);
                assert!(report.all_pass());
            });
        }
    });
    assert!(runner.peak_worktrees() <= 2);
    assert!(runner.peak_worktrees() >= 1);
    assert_eq!(runner.worktrees_in_use(), 0);
}

#[test]
fn runs_never_touch_the_source_tree() {
    let m = common::manifest("calc");
    let before = tree_hash(&m.root_path, &[]);
    let runner = common::runner(1);
    {
        let mut wt = runner.acquire_worktree(&m).unwrap();
        wt.apply_splice(Path::new("calc/stats.py"), (0, 10), "").unwrap();
        wt.write_file(Path::new("scratch.txt"), b"x").unwrap();
        runner.run_tests_with_coverage(&wt, &m.test_command);
        runner.run_tests(&wt, &m.test_command);
    }
    assert_eq!(tree_hash(&m.root_path, &[]), before);
    assert!(!m.root_path.join("calc/__pycache__").exists());
}

#[test]
fn coverage_mode_agrees_with_report_only_mode() {
    let m = common::manifest("calc");
    let runner = common::runner(1);
    let wt = runner.acquire_worktree(&m).unwrap();
    let plain = runner.run_tests(&wt, &m.test_command);
    let covered = runner.run_tests_with_coverage(&wt, &m.test_command);
    assert_eq!(plain.outcome_multiset(), covered.outcome_multiset());
    assert!(plain.coverage.is_none());
    let coverage = covered.coverage.as_ref().expect("coverage present");
    assert_eq!(coverage.len(), 9);
    assert!(coverage.values().flatten().all(|(file, _)| file != SHIM_FILE_NAME));
}

#[test]
fn splices_outside_bounds_or_overlapping_are_rejected() {
    let m = common::manifest("calc");
    let runner = common::runner(1);
    let mut wt = runner.acquire_worktree(&m).unwrap();
    let f = Path::new("calc/stats.py");
    assert!(wt.apply_splice(f, (0, 1_000_000), "").is_err());
    wt.apply_splice(f, (0, 10), "").unwrap();
    assert!(wt.apply_splice(f, (5, 15), "").is_err());
    assert!(wt.apply_splice(Path::new("../escape.py"), (0, 0), "").is_err());
}
