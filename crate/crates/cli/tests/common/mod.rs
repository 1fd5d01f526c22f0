//! Helpers for driving the `rtc` binary from tests.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rtc_core::engine::RoundTripRecord;
use serde_json::Value;

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(rel)
}

pub fn rtc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rtc"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("rtc binary runs")
}

/// Runs `rtc` and panics with its stderr unless it exits 0.
pub fn rtc_ok(args: &[&str]) {
    let out = rtc(args);
    assert_eq!(out.status.code(), Some(0), "rtc {args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

pub fn s(p: &Path) -> &str {
    p.to_str().expect("UTF-8 path")
}

/// Builds a corpus of at most `per_project` tasks from the calc fixture
/// project into `dir/corpus.jsonl`.
pub fn build_calc_corpus(dir: &Path, seed: u64, per_project: usize) -> PathBuf {
    let out = dir.join("corpus.jsonl");
    let seed = seed.to_string();
    let per_project = per_project.to_string();
    let manifest = fixture("calc.toml");
    rtc_ok(&[
        "build-corpus",
        "--manifest",
        s(&manifest),
        "--out",
        s(&out),
        "--per-project",
        &per_project,
        "--min-accept",
        "1",
        "--seed",
        &seed,
    ]);
    out
}

/// Runs a synthesis round trip over `corpus` with a mock model.
pub fn run_synthesis_mock(corpus: &Path, out_dir: &Path, mock: &str, extra: &[&str]) {
    let manifest = fixture("calc.toml");
    let mut args = vec![
        "run",
        "synthesis",
        "--tasks",
        s(corpus),
        "--manifest",
        s(&manifest),
        "--out-dir",
        s(out_dir),
        "--mock",
        mock,
    ];
    args.extend_from_slice(extra);
    rtc_ok(&args);
}

pub fn read_records(path: &Path) -> Vec<RoundTripRecord> {
    std::fs::read_to_string(path)
        .expect("records file")
        .lines()
        .map(|l| serde_json::from_str(l).expect("record parses"))
        .collect()
}

pub fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).expect("json file")).expect("json parses")
}

/// `metrics[k].summary.overall` of a run summary.
pub fn overall(summary: &Value, k: usize) -> &Value {
    &summary["metrics"][k]["summary"]["overall"]
}

/// Mean of a record's baseline scores, summed in ascending order.
pub fn baseline_mean(r: &RoundTripRecord) -> f64 {
    let mut b = r.baseline_scores.clone().expect("baseline scores");
    b.sort_by(f64::total_cmp);
    b.iter().sum::<f64>() / b.len() as f64
}

/// Mean of a record's score matrix, summed in ascending order.
pub fn matrix_mean(r: &RoundTripRecord) -> f64 {
    let mut cells: Vec<f64> = r.sim_scores.iter().flatten().copied().collect();
    cells.sort_by(f64::total_cmp);
    cells.iter().sum::<f64>() / cells.len() as f64
}
