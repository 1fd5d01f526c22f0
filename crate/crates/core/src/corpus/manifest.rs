//! Project manifests: where a project lives and how to run its suite.

use std::path::{Path, PathBuf};

use globset::{Glob, GlobBuilder, GlobSet, GlobSetBuilder};
use serde::{Deserialize, Serialize};

use super::CorpusError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    #[default]
    Python,
}

fn default_source_globs() -> Vec<String> {
    vec!["**/*.py".into()]
}

fn default_test_patterns() -> Vec<String> {
    ["**/test_*.py", "**/*_test.py", "**/tests/**", "**/conftest.py"]
        .into_iter()
        .map(String::from)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectManifest {
    pub project_id: String,
    pub root_path: PathBuf,
    /// Shell command that runs the whole suite through the shim; the runner
    /// appends `--mode <mode> --out <path>`.
    pub test_command: String,
    #[serde(default = "default_source_globs")]
    pub source_globs: Vec<String>,
    /// Files matching these are treated as test files and never sampled.
    #[serde(default = "default_test_patterns")]
    pub test_file_patterns: Vec<String>,
    #[serde(default)]
    pub language: Language,
    /// Run once in every fresh worktree before any suite run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bootstrap_command: Option<String>,
    /// Shim script copied into each worktree as `rtc_shim.py`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shim_path: Option<PathBuf>,
}

impl ProjectManifest {
    /// Reads a TOML manifest; relative paths are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let text = std::fs::read_to_string(path).map_err(|e| CorpusError::Manifest {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let mut manifest = Self::from_toml(&text).map_err(|message| CorpusError::Manifest {
            path: path.to_path_buf(),
            message,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        manifest.root_path = base.join(&manifest.root_path);
        manifest.shim_path = manifest.shim_path.map(|p| base.join(p));
        Ok(manifest)
    }

    pub fn from_toml(text: &str) -> Result<Self, String> {
        let manifest: Self = toml::from_str(text).map_err(|e| e.to_string())?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.project_id.trim().is_empty() {
            return Err("project_id must be non-empty".into());
        }
        if self.project_id.contains(['/', ':']) {
            return Err("project_id must not contain `/` or `:`".into());
        }
        if self.test_command.trim().is_empty() {
            return Err("test_command must be non-empty".into());
        }
        self.file_filter()?;
        Ok(())
    }

    pub fn file_filter(&self) -> Result<FileFilter, String> {
        FileFilter::new(&self.source_globs, &self.test_file_patterns)
    }
}

/// Source-glob inclusion minus test-file exclusion, on `/`-separated relative paths.
#[derive(Debug, Clone)]
pub struct FileFilter {
    include: GlobSet,
    exclude: GlobSet,
}

fn glob_set(patterns: &[String]) -> Result<GlobSet, String> {
    let mut b = GlobSetBuilder::new();
    for p in patterns {
        let glob: Glob = GlobBuilder::new(p)
            .literal_separator(true)
            .build()
            .map_err(|e| format!("bad pattern `{p}`: {e}"))?;
        b.add(glob);
    }
    b.build().map_err(|e| e.to_string())
}

impl FileFilter {
    pub fn new(source_globs: &[String], test_file_patterns: &[String]) -> Result<Self, String> {
        Ok(Self {
            include: glob_set(source_globs)?,
            exclude: glob_set(test_file_patterns)?,
        })
    }

    pub fn is_test_file(&self, relative: &str) -> bool {
        self.exclude.is_match(relative)
    }

    pub fn is_source_file(&self, relative: &str) -> bool {
        self.include.is_match(relative) && !self.is_test_file(relative)
    }
}
