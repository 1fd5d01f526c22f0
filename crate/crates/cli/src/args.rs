//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "rtc", version, about = "Round-trip correctness evaluation of code models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample region tasks from tested projects.
    BuildCorpus(BuildCorpusArgs),
    /// Run a round-trip evaluation.
    #[command(subcommand)]
    Run(RunCommand),
    /// Aggregate record files into tables.
    Report(ReportArgs),
    /// Correlate per-model RTC with a supervised metric.
    Correlate(CorrelateArgs),
    /// Serve the bundled test endpoint until interrupted.
    StubServer(StubServerArgs),
}

#[derive(Debug, Subcommand)]
pub enum RunCommand {
    Synthesis(SynthesisArgs),
    Editing(EditingArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SandboxArgs {
    /// Maximum number of worktrees alive at once.
    #[arg(long)]
    pub max_parallel_sandboxes: Option<usize>,
    #[arg(long, default_value_t = 300.0)]
    pub test_timeout_seconds: f64,
    /// Best-effort network isolation for suite runs.
    #[arg(long)]
    pub no_network: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BuildCorpusArgs {
    /// Project manifest (TOML); repeat for several projects.
    #[arg(long, required = true)]
    pub manifest: Vec<PathBuf>,
    /// Line-delimited task file to write.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub per_project: usize,
    #[arg(long, default_value_t = 80)]
    pub min_accept: usize,
    #[arg(long, default_value_t = 32)]
    pub min_chars: usize,
    #[arg(long, default_value_t = 384)]
    pub max_chars: usize,
    #[arg(long, default_value_t = 1024)]
    pub context_budget: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub sandbox: SandboxArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MockKind {
    Oracle,
    Echo,
    Scripted,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    /// Use a local mock model instead of a remote endpoint.
    #[arg(long, value_enum)]
    pub mock: Option<MockKind>,
    /// Script file for `--mock scripted`.
    #[arg(long)]
    pub mock_script: Option<PathBuf>,
    /// Probability that a mock backward sample is replaced by a failing one.
    #[arg(long, default_value_t = 0.0)]
    pub mock_noise: f64,
    #[arg(long)]
    pub model_endpoint: Option<String>,
    #[arg(long)]
    pub model_id: Option<String>,
    /// Distinct backward endpoint; such runs are labelled non-standard.
    #[arg(long)]
    pub backward_model_endpoint: Option<String>,
    #[arg(long)]
    pub backward_model_id: Option<String>,
    #[arg(long, default_value_t = 8)]
    pub max_concurrent_requests: usize,
    #[arg(long)]
    pub requests_per_minute: Option<u32>,
    #[arg(long, default_value_t = 3)]
    pub retry_limit: u32,
    #[arg(long, default_value_t = 120.0)]
    pub request_timeout_seconds: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SamplingArgs {
    #[arg(long)]
    pub nf: Option<usize>,
    #[arg(long)]
    pub nb: Option<usize>,
    #[arg(long)]
    pub fwd_temp: Option<f64>,
    #[arg(long)]
    pub bwd_temp: Option<f64>,
    #[arg(long)]
    pub max_fwd_chars: Option<usize>,
    #[arg(long)]
    pub max_bwd_chars: Option<usize>,
    /// Also run the uninformative-description baseline.
    #[arg(long)]
    pub baseline: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Tasks evaluated concurrently; defaults to the sandbox cap.
    #[arg(long)]
    pub max_parallel_tasks: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SynthesisArgs {
    /// Task file written by `build-corpus`.
    #[arg(long, conflicts_with = "humaneval", required_unless_present = "humaneval")]
    pub tasks: Option<PathBuf>,
    /// Manifests of the projects the tasks come from.
    #[arg(long, requires = "tasks")]
    pub manifest: Vec<PathBuf>,
    /// HumanEval-format problem archive.
    #[arg(long)]
    pub humaneval: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[command(flatten)]
    pub sandbox: SandboxArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EditingArgs {
    #[arg(long)]
    pub tasks: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Comma-separated metrics; the first is the primary one.
    #[arg(long, default_value = "em")]
    pub metrics: String,
    /// Also score greedy edits from the reference comments and BLEU of
    /// greedy descriptions against them.
    #[arg(long)]
    pub supervised: bool,
    /// Exact match on raw text instead of normalized text.
    #[arg(long)]
    pub strict_match: bool,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    Project,
    Model,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReportArgs {
    /// Record files; with `--repeat-runs` each file is one run.
    #[arg(long, required = true, num_args = 1..)]
    pub records: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = GroupBy::Project)]
    pub group_by: GroupBy,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Report the standard deviation of the per-run mean RTC.
    #[arg(long)]
    pub repeat_runs: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CorrelateArgs {
    /// Record files; per-model mean RTC is taken from these.
    #[arg(long, num_args = 1..)]
    pub records: Vec<PathBuf>,
    /// CSV whose first column is model_id and second the supervised metric.
    /// Without `--records` a third `rtc` column supplies the RTC values.
    #[arg(long)]
    pub supervised: PathBuf,
    /// Where to write the result; stdout otherwise.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StubReplyKind {
    Fixed,
    Echo,
}

#[derive(Debug, Clone, Args)]
pub struct StubServerArgs {
    #[arg(long, default_value = "127.0.0.1:8089")]
    pub bind: String,
    #[arg(long, value_enum, default_value_t = StubReplyKind::Echo)]
    pub reply: StubReplyKind,
    #[arg(long, default_value_t = 0)]
    pub fail_first: usize,
}
