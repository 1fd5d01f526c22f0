//! Subcommand implementations.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, Context};
use log::{info, warn};
use serde::Serialize;

use rtc_core::corpus::{read_jsonl_file, sample_project, write_jsonl, CorpusError, CorpusStats, ProjectManifest, RegionTask, RejectReason, SampleConfig, SampleOutcome};
use rtc_core::editing::{
    extract_new_code, load_edit_tasks, supervised_description_bleu, supervised_edit_generation, EditSimilarity, EditTask,
};
use rtc_core::engine::{aggregate, evaluate_tasks, rescore, AggregateSummary, GroupedEstimate, RoundTripRecord, SamplingConfig, SCHEMA_VERSION};
use rtc_core::gateway::stub::{StubConfig, StubReply, StubServer};
use rtc_core::gateway::{build_generator, Generator, ModelKind, ModelSpec};
use rtc_core::sandbox::{SandboxConfig, SandboxRunner};
use rtc_core::similarity::{corpus_bleu, MetricId, Normalization};
use rtc_core::stats::{correlate as correlate_stats, length_stats, per_project_table, repeat_run_stddev, write_length_csv, write_project_csv, CorrelationResult, LengthStats};
use rtc_core::synthesis::{load_humaneval, HumanEvalProblem, PassSimilarity, SynthesisUnit};
use rtc_core::text::char_len;

use crate::args::{
    BuildCorpusArgs, CorrelateArgs, EditingArgs, GroupBy, MockKind, ModelArgs, ReportArgs, SamplingArgs, SandboxArgs,
    StubReplyKind, StubServerArgs, SynthesisArgs,
};
use crate::manifest::ManifestWriter;
use crate::{CmdResult, Failure, Status};

pub const RECORDS_FILE: &str = "records.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";
pub const REPORT_SUMMARY_FILE: &str = "report_summary.json";
pub const LENGTHS_FILE: &str = "lengths.csv";
pub const NON_STANDARD_LABEL: &str = "non-standard: forward and backward models differ";

fn sandbox_config(args: &SandboxArgs) -> Result<SandboxConfig, Failure> {
    if !(args.test_timeout_seconds > 0.0) {
        return Err(Failure::config(anyhow!("--test-timeout-seconds must be positive")));
    }
    let mut cfg = SandboxConfig {
        timeout: Duration::from_secs_f64(args.test_timeout_seconds),
        no_network: args.no_network,
        ..SandboxConfig::default()
    };
    if let Some(n) = args.max_parallel_sandboxes {
        if n == 0 {
            return Err(Failure::config(anyhow!("--max-parallel-sandboxes must be positive")));
        }
        cfg.max_parallel = n;
    }
    Ok(cfg)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let bytes = serde_json::to_vec_pretty(value).map_err(Failure::runtime)?;
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display())).map_err(Failure::runtime)
}

fn write_records(path: &Path, records: &[RoundTripRecord]) -> Result<(), Failure> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display())).map_err(Failure::runtime)?;
    write_jsonl(records, BufWriter::new(file)).map_err(Failure::runtime)
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display())).map_err(Failure::runtime)
}

fn load_manifests(paths: &[PathBuf]) -> Result<Vec<ProjectManifest>, Failure> {
    paths.iter().map(|p| ProjectManifest::load(p).map_err(Failure::config)).collect()
}

#[derive(Debug, Serialize)]
struct ProjectEntry {
    manifest: PathBuf,
    accepted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<RejectReason>,
    stats: CorpusStats,
}

#[derive(Debug, Serialize)]
struct CorpusSidecar {
    seed: u64,
    tasks: usize,
    projects: Vec<ProjectEntry>,
}

/// Path of the stats record written next to a corpus file.
pub fn stats_sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".stats.json");
    out.with_file_name(name)
}

pub fn build_corpus(args: &BuildCorpusArgs) -> CmdResult {
    let clock = ManifestWriter::start();
    if args.min_chars > args.max_chars {
        return Err(Failure::config(anyhow!("--min-chars exceeds --max-chars")));
    }
    let manifests = load_manifests(&args.manifest)?;
    let runner = SandboxRunner::new(sandbox_config(&args.sandbox)?);
    let cfg = SampleConfig {
        seed: args.seed,
        per_project: args.per_project,
        min_accept: args.min_accept,
        min_chars: args.min_chars,
        max_chars: args.max_chars,
        context_budget: args.context_budget,
        ..SampleConfig::default()
    };
    let mut tasks: Vec<RegionTask> = Vec::new();
    let mut projects = Vec::new();
    for (manifest, path) in manifests.iter().zip(&args.manifest) {
        info!("sampling project `{}`", manifest.project_id);
        let outcome = sample_project(manifest, &cfg, &runner).map_err(|e| match e {
            CorpusError::Manifest { .. } => Failure::config(e),
            other => Failure::runtime(other),
        })?;
        let stats = outcome.stats().clone();
        info!(
            "`{}`: {} candidates, {} drawn, {} accepted",
            stats.project_id, stats.candidates_enumerated, stats.drawn, stats.accepted
        );
        match outcome {
            SampleOutcome::Accepted { tasks: t, stats } => {
                tasks.extend(t);
                projects.push(ProjectEntry { manifest: path.clone(), accepted: true, reason: None, stats });
            }
            SampleOutcome::Rejected { reason, stats } => {
                warn!("project `{}` rejected: {reason}", stats.project_id);
                projects.push(ProjectEntry { manifest: path.clone(), accepted: false, reason: Some(reason), stats });
            }
        }
    }
    let out_dir = args.out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    create_dir(out_dir)?;
    let file = File::create(&args.out).with_context(|| format!("creating {}", args.out.display())).map_err(Failure::runtime)?;
    write_jsonl(&tasks, BufWriter::new(file)).map_err(Failure::runtime)?;
    write_json(
        &stats_sidecar_path(&args.out),
        &CorpusSidecar { seed: args.seed, tasks: tasks.len(), projects },
    )?;
    clock.write(out_dir, "build-corpus", args, Some(args.seed), None).map_err(Failure::runtime)?;
    info!("wrote {} tasks to {}", tasks.len(), args.out.display());
    Ok(Status::Clean)
}

fn sampling_config(args: &SamplingArgs, defaults: SamplingConfig) -> Result<SamplingConfig, Failure> {
    let cfg = SamplingConfig {
        n_forward: args.nf.unwrap_or(defaults.n_forward),
        n_backward: args.nb.unwrap_or(defaults.n_backward),
        forward_temperature: args.fwd_temp.unwrap_or(defaults.forward_temperature),
        backward_temperature: args.bwd_temp.unwrap_or(defaults.backward_temperature),
        max_forward_chars: args.max_fwd_chars.unwrap_or(defaults.max_forward_chars),
        max_backward_chars: args.max_bwd_chars.unwrap_or(defaults.max_backward_chars),
        rng_seed: Some(args.seed),
    };
    cfg.validate().map_err(Failure::config)?;
    Ok(cfg)
}

fn remote_spec(args: &ModelArgs, endpoint: &str, model_id: Option<&str>) -> ModelSpec {
    ModelSpec {
        max_concurrent_requests: args.max_concurrent_requests,
        requests_per_minute: args.requests_per_minute,
        retry_limit: args.retry_limit,
        timeout_seconds: args.request_timeout_seconds,
        ..ModelSpec::remote(model_id.unwrap_or(endpoint), endpoint)
    }
}

struct Models {
    forward: Arc<dyn Generator>,
    backward: Arc<dyn Generator>,
    forward_id: String,
    backward_id: String,
}

impl Models {
    fn standard(&self) -> bool {
        self.forward_id == self.backward_id
    }
}

fn build_models(args: &ModelArgs, seed: u64) -> Result<Models, Failure> {
    let forward_spec = match (args.mock, &args.model_endpoint) {
        (Some(_), Some(_)) => return Err(Failure::config(anyhow!("--mock and --model-endpoint are exclusive"))),
        (None, None) => return Err(Failure::config(anyhow!("give either --mock or --model-endpoint"))),
        (Some(kind), None) => {
            let kind = match kind {
                MockKind::Oracle => ModelKind::MockOracle,
                MockKind::Echo => ModelKind::MockEcho,
                MockKind::Scripted => ModelKind::MockScripted,
            };
            let mut spec = ModelSpec::mock(kind);
            if let Some(id) = &args.model_id {
                spec.model_id = id.clone();
            }
            spec.script_path = args.mock_script.clone();
            spec.mock_seed = seed;
            spec.mock_noise = args.mock_noise;
            spec
        }
        (None, Some(endpoint)) => remote_spec(args, endpoint, args.model_id.as_deref()),
    };
    let forward = build_generator(&forward_spec).map_err(Failure::config)?;
    let (backward, backward_id) = match &args.backward_model_endpoint {
        Some(endpoint) => {
            let spec = remote_spec(args, endpoint, args.backward_model_id.as_deref());
            (build_generator(&spec).map_err(Failure::config)?, spec.model_id)
        }
        None => (Arc::clone(&forward), forward_spec.model_id.clone()),
    };
    Ok(Models {
        forward,
        backward,
        forward_id: forward_spec.model_id,
        backward_id,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricSummary {
    pub metric: MetricId,
    pub records_file: String,
    pub summary: AggregateSummary,
    /// Mean of per-pair sentence BLEU; equals the overall mean RTC.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_sentence_bleu: Option<f64>,
    /// BLEU with n-gram statistics pooled over every scored pair.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus_bleu: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SupervisedSummary {
    pub n_tasks: usize,
    /// Exact-match percentage of greedy edits generated from the reference comment.
    pub edit_generation_em: Option<f64>,
    /// Mean sentence BLEU of greedy descriptions against the reference comment.
    pub description_bleu: Option<f64>,
    pub failures: Vec<(String, String)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub task_kind: &'static str,
    pub forward_model_id: String,
    pub backward_model_id: String,
    pub standard: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub sampling: SamplingConfig,
    pub baseline: bool,
    pub n_tasks: usize,
    pub tasks_with_failures: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub excluded: Vec<(String, String)>,
    pub metrics: Vec<MetricSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub supervised: Option<SupervisedSummary>,
}

fn summarize(metric: MetricId, file: &str, records: &[RoundTripRecord]) -> Result<MetricSummary, Failure> {
    let estimates: Vec<GroupedEstimate> = records
        .iter()
        .map(GroupedEstimate::from_record)
        .collect::<Result<_, _>>()
        .map_err(Failure::runtime)?;
    Ok(MetricSummary {
        metric,
        records_file: file.to_string(),
        summary: aggregate(&estimates),
        mean_sentence_bleu: None,
        corpus_bleu: None,
    })
}

fn failed_tasks(records: &[RoundTripRecord]) -> Vec<String> {
    records.iter().filter(|r| r.has_failures()).map(|r| r.task_id.clone()).collect()
}

fn log_overall(metric: MetricId, summary: &MetricSummary) {
    if let Some(o) = &summary.summary.overall {
        match o.mean_lift {
            Some(lift) => info!("RTC_{metric} = {} (lift {lift}) over {} tasks", o.mean_rtc, o.n),
            None => info!("RTC_{metric} = {} over {} tasks", o.mean_rtc, o.n),
        }
    }
}

fn synthesis_units(args: &SynthesisArgs, runner: &SandboxRunner) -> Result<(Vec<SynthesisUnit>, Vec<(String, String)>), Failure> {
    if let Some(path) = &args.humaneval {
        let problems: Vec<HumanEvalProblem> = read_jsonl_file(path)
            .with_context(|| format!("reading {}", path.display()))
            .map_err(Failure::config)?;
        let (units, excluded) = load_humaneval(&problems, runner, runner.config().timeout);
        return Ok((units.into_iter().map(SynthesisUnit::HumanEval).collect(), excluded));
    }
    let path = args.tasks.as_ref().expect("clap requires --tasks or --humaneval");
    let tasks: Vec<RegionTask> = read_jsonl_file(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::config)?;
    let projects: BTreeMap<String, Arc<ProjectManifest>> = load_manifests(&args.manifest)?
        .into_iter()
        .map(|m| (m.project_id.clone(), Arc::new(m)))
        .collect();
    let units = tasks
        .into_iter()
        .map(|task| match projects.get(&task.project_id) {
            Some(project) => Ok(SynthesisUnit::Region { project: Arc::clone(project), task }),
            None => Err(Failure::config(anyhow!(
                "task `{}` belongs to project `{}`, which no --manifest describes",
                task.task_id,
                task.project_id
            ))),
        })
        .collect::<Result<_, _>>()?;
    Ok((units, Vec::new()))
}

pub fn run_synthesis(args: &SynthesisArgs) -> CmdResult {
    let clock = ManifestWriter::start();
    let cfg = sampling_config(&args.sampling, SamplingConfig::synthesis_defaults())?;
    let sandbox = sandbox_config(&args.sandbox)?;
    let parallelism = args.sampling.max_parallel_tasks.unwrap_or(sandbox.max_parallel);
    let models = build_models(&args.model, args.sampling.seed)?;
    let runner = SandboxRunner::new(sandbox);
    let (units, excluded) = synthesis_units(args, &runner)?;
    create_dir(&args.out_dir)?;

    let sim = PassSimilarity { runner: &runner };
    let records = evaluate_tasks(
        &units,
        models.forward.as_ref(),
        models.backward.as_ref(),
        &sim,
        &cfg,
        args.sampling.baseline,
        parallelism,
    );
    write_records(&args.out_dir.join(RECORDS_FILE), &records)?;
    let metric = summarize(MetricId::Pass, RECORDS_FILE, &records)?;
    log_overall(MetricId::Pass, &metric);
    let failures = failed_tasks(&records);
    let summary = RunSummary {
        schema_version: SCHEMA_VERSION,
        task_kind: "synthesis",
        forward_model_id: models.forward_id.clone(),
        backward_model_id: models.backward_id.clone(),
        standard: models.standard(),
        label: (!models.standard()).then(|| NON_STANDARD_LABEL.to_string()),
        sampling: cfg,
        baseline: args.sampling.baseline,
        n_tasks: records.len(),
        tasks_with_failures: failures.clone(),
        excluded,
        metrics: vec![metric],
        supervised: None,
    };
    write_json(&args.out_dir.join(SUMMARY_FILE), &summary)?;
    clock
        .write(&args.out_dir, "run synthesis", args, Some(args.sampling.seed), Some(models.forward_id))
        .map_err(Failure::runtime)?;
    Ok(if failures.is_empty() { Status::Clean } else { Status::TaskFailures })
}

fn parse_metrics(list: &str) -> Result<Vec<MetricId>, Failure> {
    let mut metrics: Vec<MetricId> = Vec::new();
    for part in list.split(',').filter(|s| !s.trim().is_empty()) {
        let m: MetricId = part.parse().map_err(|e: String| Failure::config(anyhow!(e)))?;
        if m == MetricId::Pass {
            return Err(Failure::config(anyhow!("the pass metric applies to synthesis runs only")));
        }
        if !metrics.contains(&m) {
            metrics.push(m);
        }
    }
    if metrics.is_empty() {
        return Err(Failure::config(anyhow!("--metrics lists no metric")));
    }
    Ok(metrics)
}

fn metric_records_file(metric: MetricId, primary: bool) -> String {
    if primary {
        RECORDS_FILE.to_string()
    } else {
        format!("records_{}.jsonl", metric.as_str())
    }
}

fn editing_corpus_bleu(records: &[RoundTripRecord], tasks: &[EditTask]) -> f64 {
    let mut pairs: Vec<(String, &str)> = Vec::new();
    for (record, task) in records.iter().zip(tasks) {
        for (i, row) in record.backward_samples.iter().enumerate() {
            for (j, sample) in row.iter().enumerate() {
                let candidate = if record.failed_cells.contains(&(i, j)) {
                    String::new()
                } else {
                    extract_new_code(sample)
                };
                pairs.push((candidate, task.new_code.as_str()));
            }
        }
    }
    corpus_bleu(pairs.iter().map(|(c, r)| (c.as_str(), *r)))
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

fn run_supervised(
    tasks: &[EditTask],
    model: &dyn Generator,
    normalization: Normalization,
    cfg: &SamplingConfig,
) -> SupervisedSummary {
    let mut em = Vec::new();
    let mut bleus = Vec::new();
    let mut failures = Vec::new();
    for task in tasks.iter().filter(|t| t.reference_comment.is_some()) {
        match supervised_edit_generation(task, model, normalization, cfg.max_backward_chars) {
            Ok(Some(score)) => em.push(f64::from(score.value) * 100.0),
            Ok(None) => {}
            Err(e) => {
                failures.push((task.task_id.clone(), format!("edit generation: {e}")));
                em.push(0.0);
            }
        }
        match supervised_description_bleu(task, model, cfg.max_forward_chars) {
            Ok(Some((_, score))) => bleus.push(score),
            Ok(None) => {}
            Err(e) => {
                failures.push((task.task_id.clone(), format!("description: {e}")));
                bleus.push(0.0);
            }
        }
    }
    SupervisedSummary {
        n_tasks: em.len(),
        edit_generation_em: mean(&em),
        description_bleu: mean(&bleus),
        failures,
    }
}

pub fn run_editing(args: &EditingArgs) -> CmdResult {
    let clock = ManifestWriter::start();
    let cfg = sampling_config(&args.sampling, SamplingConfig::editing_defaults())?;
    let metrics = parse_metrics(&args.metrics)?;
    let normalization = if args.strict_match { Normalization::Strict } else { Normalization::Standard };
    let tasks = load_edit_tasks(&args.tasks)
        .with_context(|| format!("reading {}", args.tasks.display()))
        .map_err(Failure::config)?;
    let models = build_models(&args.model, args.sampling.seed)?;
    let parallelism = args
        .sampling
        .max_parallel_tasks
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(4, |n| n.get()));
    create_dir(&args.out_dir)?;

    let primary = EditSimilarity::new(metrics[0], normalization).expect("pass metric rejected above");
    let records = evaluate_tasks(
        &tasks,
        models.forward.as_ref(),
        models.backward.as_ref(),
        &primary,
        &cfg,
        args.sampling.baseline,
        parallelism,
    );
    let mut summaries = Vec::new();
    for (k, &metric) in metrics.iter().enumerate() {
        let file = metric_records_file(metric, k == 0);
        let scored: Vec<RoundTripRecord> = if k == 0 {
            records.clone()
        } else {
            let sim = EditSimilarity::new(metric, normalization).expect("pass metric rejected above");
            records.iter().zip(&tasks).map(|(r, t)| rescore(r, t, &sim)).collect()
        };
        write_records(&args.out_dir.join(&file), &scored)?;
        let mut summary = summarize(metric, &file, &scored)?;
        if metric == MetricId::Bleu {
            summary.mean_sentence_bleu = summary.summary.overall.as_ref().map(|o| o.mean_rtc);
            summary.corpus_bleu = Some(editing_corpus_bleu(&scored, &tasks));
        }
        log_overall(metric, &summary);
        summaries.push(summary);
    }
    let supervised = args
        .supervised
        .then(|| run_supervised(&tasks, models.forward.as_ref(), normalization, &cfg));
    let failures = failed_tasks(&records);
    let supervised_failed = supervised.as_ref().is_some_and(|s| !s.failures.is_empty());
    let summary = RunSummary {
        schema_version: SCHEMA_VERSION,
        task_kind: "editing",
        forward_model_id: models.forward_id.clone(),
        backward_model_id: models.backward_id.clone(),
        standard: models.standard(),
        label: (!models.standard()).then(|| NON_STANDARD_LABEL.to_string()),
        sampling: cfg,
        baseline: args.sampling.baseline,
        n_tasks: records.len(),
        tasks_with_failures: failures.clone(),
        excluded: Vec::new(),
        metrics: summaries,
        supervised,
    };
    write_json(&args.out_dir.join(SUMMARY_FILE), &summary)?;
    clock
        .write(&args.out_dir, "run editing", args, Some(args.sampling.seed), Some(models.forward_id))
        .map_err(Failure::runtime)?;
    Ok(if failures.is_empty() && !supervised_failed { Status::Clean } else { Status::TaskFailures })
}

fn read_records(path: &Path) -> Result<Vec<RoundTripRecord>, Failure> {
    read_jsonl_file(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::config)
}

#[derive(Debug, Serialize)]
struct ReportSummary {
    group_by: GroupBy,
    metrics: Vec<MetricId>,
    n_records: usize,
    summary: AggregateSummary,
    lengths: [LengthStats; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    repeat_run_stddev: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    run_means: Option<Vec<f64>>,
}

fn grouped(record: &RoundTripRecord, by: GroupBy) -> Result<GroupedEstimate, Failure> {
    let mut e = GroupedEstimate::from_record(record)
        .map_err(|err| Failure::config(anyhow!("record `{}`: {err}", record.task_id)))?;
    if by == GroupBy::Model {
        e.group = record.model_id.clone();
    }
    Ok(e)
}

pub fn report(args: &ReportArgs) -> CmdResult {
    let clock = ManifestWriter::start();
    let runs: Vec<Vec<RoundTripRecord>> = args.records.iter().map(|p| read_records(p)).collect::<Result<_, _>>()?;
    let all: Vec<&RoundTripRecord> = runs.iter().flatten().collect();
    let estimates: Vec<GroupedEstimate> = all.iter().map(|r| grouped(r, args.group_by)).collect::<Result<_, _>>()?;
    let mut metrics: Vec<MetricId> = all.iter().map(|r| r.metric).collect();
    metrics.sort();
    metrics.dedup();

    let (repeat_run_stddev, run_means) = if args.repeat_runs {
        let per_run: Vec<Vec<f64>> = runs
            .iter()
            .map(|run| run.iter().map(|r| grouped(r, args.group_by).map(|e| e.rtc)).collect())
            .collect::<Result<_, _>>()?;
        let sd = repeat_run_stddev(&per_run).map_err(Failure::config)?;
        let means = per_run.iter().map(|r| mean(r).unwrap_or(0.0)).collect();
        (Some(sd), Some(means))
    } else {
        (None, None)
    };

    let samples: Vec<(usize, f64)> = all
        .iter()
        .flat_map(|r| {
            r.backward_samples
                .iter()
                .flatten()
                .zip(r.sim_scores.iter().flatten())
                .map(|(s, &score)| (char_len(s), score))
        })
        .collect();
    let (zero, nonzero) = length_stats(&samples);

    create_dir(&args.out_dir)?;
    let table_name = match args.group_by {
        GroupBy::Project => "per_project.csv",
        GroupBy::Model => "per_model.csv",
    };
    let rows = per_project_table(&estimates);
    let table = File::create(args.out_dir.join(table_name)).map_err(Failure::runtime)?;
    write_project_csv(&rows, BufWriter::new(table)).map_err(Failure::runtime)?;
    let lengths = File::create(args.out_dir.join(LENGTHS_FILE)).map_err(Failure::runtime)?;
    write_length_csv(&[&zero, &nonzero], BufWriter::new(lengths)).map_err(Failure::runtime)?;
    let summary = ReportSummary {
        group_by: args.group_by,
        metrics,
        n_records: all.len(),
        summary: aggregate(&estimates),
        lengths: [zero, nonzero],
        repeat_run_stddev,
        run_means,
    };
    write_json(&args.out_dir.join(REPORT_SUMMARY_FILE), &summary)?;
    clock.write(&args.out_dir, "report", args, None, None).map_err(Failure::runtime)?;
    Ok(Status::Clean)
}

#[derive(Debug, Serialize)]
pub struct CorrelationReport {
    pub supervised_metric: String,
    pub models: Vec<String>,
    pub supervised: Vec<f64>,
    pub rtc: Vec<f64>,
    #[serde(flatten)]
    pub result: CorrelationResult,
    pub rank_ties: &'static str,
}

fn parse_number(field: &str, line: usize, column: &str) -> Result<f64, Failure> {
    field
        .trim()
        .parse()
        .map_err(|_| Failure::config(anyhow!("line {line}: `{field}` in column `{column}` is not a number")))
}

pub fn correlate(args: &CorrelateArgs) -> CmdResult {
    let mut reader = csv::Reader::from_path(&args.supervised)
        .with_context(|| format!("reading {}", args.supervised.display()))
        .map_err(Failure::config)?;
    let headers = reader.headers().map_err(Failure::config)?.clone();
    if headers.len() < 2 {
        return Err(Failure::config(anyhow!("supervised CSV needs model_id and metric columns")));
    }
    let metric_name = headers[1].to_string();
    let rtc_column = headers.iter().position(|h| h.trim() == "rtc");
    let mut table: Vec<(String, f64, Option<f64>)> = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(Failure::config)?;
        let line = i + 2;
        let supervised = parse_number(&row[1], line, &metric_name)?;
        let rtc = rtc_column
            .map(|c| parse_number(row.get(c).unwrap_or(""), line, "rtc"))
            .transpose()?;
        table.push((row[0].trim().to_string(), supervised, rtc));
    }

    let mut per_model: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for path in &args.records {
        for r in read_records(path)? {
            let e = grouped(&r, GroupBy::Model)?;
            per_model.entry(e.group).or_default().push(e.rtc);
        }
    }
    let (mut models, mut xs, mut ys) = (Vec::new(), Vec::new(), Vec::new());
    for (model, supervised, rtc_col) in table {
        let rtc = if args.records.is_empty() {
            rtc_col.ok_or_else(|| Failure::config(anyhow!("without --records the CSV needs an `rtc` column")))?
        } else if let Some(v) = per_model.get(&model).and_then(|v| mean(v)) {
            v
        } else {
            warn!("model `{model}` has no records; skipped");
            continue;
        };
        models.push(model);
        xs.push(supervised);
        ys.push(rtc);
    }
    let result = correlate_stats(&xs, &ys).map_err(Failure::config)?;
    let report = CorrelationReport {
        supervised_metric: metric_name,
        models,
        supervised: xs,
        rtc: ys,
        result,
        rank_ties: "average ranks",
    };
    let text = serde_json::to_string_pretty(&report).map_err(Failure::runtime)?;
    match &args.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())).map_err(Failure::runtime)?,
        None => println!("{text}"),
    }
    info!("pearson r = {}, spearman rho = {} (n = {})", result.pearson_r, result.spearman_rho, result.n);
    Ok(Status::Clean)
}

pub fn stub_server(args: &StubServerArgs) -> CmdResult {
    let config = StubConfig {
        fail_first: args.fail_first,
        reply: match args.reply {
            StubReplyKind::Fixed => StubReply::Fixed("stub completion".into()),
            StubReplyKind::Echo => StubReply::EchoPrompt,
        },
        ..StubConfig::default()
    };
    let server = StubServer::bind(&args.bind, config).map_err(Failure::config)?;
    info!("stub endpoint listening on {}", server.url());
    server.join();
    Ok(Status::Clean)
}
