//! The run manifest written into every output directory.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

pub const MANIFEST_FILE: &str = "run_manifest.json";

#[derive(Debug, Serialize)]
pub struct RunManifest<'a, C: Serialize> {
    pub command_line: Vec<String>,
    pub subcommand: &'a str,
    pub config: &'a C,
    pub seed: Option<u64>,
    pub model_id: Option<String>,
    pub harness_version: &'static str,
    pub started_unix_seconds: u64,
    pub finished_unix_seconds: u64,
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

pub struct ManifestWriter {
    started: u64,
}

impl ManifestWriter {
    pub fn start() -> Self {
        Self { started: unix_now() }
    }

    pub fn write<C: Serialize>(
        &self,
        dir: &Path,
        subcommand: &str,
        config: &C,
        seed: Option<u64>,
        model_id: Option<String>,
    ) -> anyhow::Result<()> {
        let manifest = RunManifest {
            command_line: std::env::args().collect(),
            subcommand,
            config,
            seed,
            model_id,
            harness_version: env!("CARGO_PKG_VERSION"),
            started_unix_seconds: self.started,
            finished_unix_seconds: unix_now(),
        };
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(MANIFEST_FILE), serde_json::to_vec_pretty(&manifest)?)?;
        Ok(())
    }
}
