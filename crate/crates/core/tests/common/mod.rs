//! Shared helpers for the integration tests.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::io::Write;

use rtc_core::corpus::ProjectManifest;
use rtc_core::sandbox::{SandboxConfig, SandboxRunner};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn fixture(rel: &str) -> PathBuf {
    fixtures().join(rel)
}

pub fn manifest(name: &str) -> ProjectManifest {
    ProjectManifest::load(&fixture(&format!("{name}.toml"))).expect("fixture manifest loads")
}

pub fn runner(max_parallel: usize) -> SandboxRunner {
    SandboxRunner::new(SandboxConfig {
        max_parallel,
        timeout: std::time::Duration::from_secs(60),
        ..SandboxConfig::default()
    })
}

/// Runs a Python oracle script from `fixtures/oracles` and returns its stdout.
pub fn python_oracle(script: &str, args: &[&str], stdin: Option<&str>) -> String {
    let mut child = Command::new("python3")
        .arg(fixture(&format!("oracles/{script}")))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::inherit())
        .spawn()
        .expect("python3 is available");
    {
        let mut input = child.stdin.take().expect("piped stdin");
        if let Some(text) = stdin {
            input.write_all(text.as_bytes()).expect("write oracle input");
        }
    }
    let out = child.wait_with_output().expect("oracle runs");
    assert!(out.status.success(), "oracle {script} failed");
    String::from_utf8(out.stdout).expect("oracle prints UTF-8")
}

/// Every `.py` file under the fixture directory, sorted.
pub fn python_fixture_files() -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = walkdir::WalkDir::new(fixtures())
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file() && e.path().extension().is_some_and(|x| x == "py"))
        .map(|e| e.into_path())
        .collect();
    files.sort();
    files
}

/// Copies a fixture project into a temporary directory and returns a
/// manifest pointing at the copy.
pub fn project_copy(name: &str) -> (tempfile::TempDir, ProjectManifest) {
    let original = manifest(name);
    let dir = tempfile::tempdir().expect("tempdir");
    for entry in walkdir::WalkDir::new(&original.root_path) {
        let entry = entry.expect("walk fixture");
        let rel = entry.path().strip_prefix(&original.root_path).expect("child of root");
        let target = dir.path().join(rel);
        if entry.file_type().is_dir() {
            std::fs::create_dir_all(&target).expect("mkdir");
        } else {
            std::fs::copy(entry.path(), &target).expect("copy");
        }
    }
    let mut m = original;
    m.root_path = dir.path().to_path_buf();
    (dir, m)
}
