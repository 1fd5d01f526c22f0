//! Round-trip sampling and RTC / forward-lift estimation.
//!
//! For an input `x`, the forward model produces `n_forward` descriptions;
//! for each, the backward model produces `n_backward` reconstructions, and
//! every reconstruction is scored against `x`. RTC is the mean over that
//! `n_forward x n_backward` score matrix. The forward lift subtracts the mean
//! score obtained when the backward model is given a fixed uninformative
//! utterance instead of a forward sample.

use std::collections::BTreeMap;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{Direction, GenerationRequest, Generator, RequestMetadata};
use crate::similarity::MetricId;
use crate::text::truncate_at_boundary;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub n_forward: usize,
    pub n_backward: usize,
    pub forward_temperature: f64,
    pub backward_temperature: f64,
    pub max_forward_chars: usize,
    /// Output cap for backward (code) generations.
    pub max_backward_chars: usize,
    /// Seed for mock models; remote endpoints ignore it.
    pub rng_seed: Option<u64>,
}

impl SamplingConfig {
    /// 3 forward samples at 0.8, one backward sample at 0.1, 128-char descriptions.
    pub fn synthesis_defaults() -> Self {
        Self {
            n_forward: 3,
            n_backward: 1,
            forward_temperature: 0.8,
            backward_temperature: 0.1,
            max_forward_chars: 128,
            max_backward_chars: 4096,
            rng_seed: None,
        }
    }

    /// 3 forward samples at 1.0, one greedy backward sample.
    pub fn editing_defaults() -> Self {
        Self {
            forward_temperature: 1.0,
            backward_temperature: 0.0,
            ..Self::synthesis_defaults()
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: &str| Err(EngineError::InvalidConfig(m.to_string()));
        if self.n_forward == 0 {
            return bad("n_forward must be at least 1");
        }
        if self.n_backward == 0 {
            return bad("n_backward must be at least 1");
        }
        if !(self.forward_temperature >= 0.0 && self.backward_temperature >= 0.0) {
            return bad("temperatures must be non-negative");
        }
        if self.max_forward_chars == 0 || self.max_backward_chars == 0 {
            return bad("output caps must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("invalid sampling config: {0}")]
    InvalidConfig(String),
    #[error("record `{0}` has an empty score matrix")]
    EmptyScores(String),
    #[error("record `{0}` has no baseline scores")]
    MissingBaseline(String),
}

/// A prompt plus the metadata mock models read.
#[derive(Debug, Clone, PartialEq)]
pub struct Prompt {
    pub text: String,
    pub metadata: RequestMetadata,
}

/// One round-trip unit: knows how to phrase both directions for its input.
pub trait RoundTripTask: Sync {
    fn task_id(&self) -> &str;

    /// Aggregation key (project id for synthesis corpora).
    fn group(&self) -> &str;

    fn forward_prompt(&self) -> Prompt;

    /// Backward prompt conditioned on `description`; `direction` is
    /// [`Direction::Baseline`] when `description` is the uninformative utterance.
    fn backward_prompt(&self, description: &str, direction: Direction) -> Prompt;

    fn baseline_description(&self) -> &str;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub value: f64,
    pub flag: Option<String>,
}

impl Scored {
    pub fn clean(value: f64) -> Self {
        Self { value, flag: None }
    }

    pub fn flagged(value: f64, flag: impl Into<String>) -> Self {
        Self {
            value,
            flag: Some(flag.into()),
        }
    }
}

/// `sim(candidate, x)` where `x` is carried by the task.
pub trait Similarity<T: ?Sized>: Sync {
    fn metric(&self) -> MetricId;
    fn score(&self, candidate: &str, task: &T) -> Scored;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTripRecord {
    pub schema_version: u32,
    pub task_id: String,
    pub group: String,
    pub model_id: String,
    pub metric: MetricId,
    pub forward_samples: Vec<String>,
    /// `[n_forward][n_backward]`
    pub backward_samples: Vec<Vec<String>>,
    /// `[n_forward][n_backward]`, each within the metric's range.
    pub sim_scores: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_backward: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_scores: Option<Vec<f64>>,
    /// `(forward, backward)` cells whose generation failed; scored at the metric minimum.
    #[serde(default)]
    pub failed_cells: Vec<(usize, usize)>,
    #[serde(default)]
    pub flags: Vec<String>,
}

impl RoundTripRecord {
    pub fn has_failures(&self) -> bool {
        !self.failed_cells.is_empty() || self.flags.iter().any(|f| f.starts_with("baseline failed"))
    }

    /// Every score lies inside the metric range and the matrix is `n_forward x n_backward`.
    pub fn is_well_formed(&self, cfg: &SamplingConfig) -> bool {
        let range = self.metric.range_min()..=self.metric.range_max();
        self.forward_samples.len() == cfg.n_forward
            && self.backward_samples.len() == cfg.n_forward
            && self.sim_scores.len() == cfg.n_forward
            && self.backward_samples.iter().all(|r| r.len() == cfg.n_backward)
            && self.sim_scores.iter().all(|r| r.len() == cfg.n_backward)
            && self.sim_scores.iter().flatten().all(|s| range.contains(s))
            && self
                .baseline_scores
                .iter()
                .flatten()
                .all(|s| range.contains(s))
    }
}

fn request(prompt: Prompt, temperature: f64, max_output_chars: usize, n: usize) -> GenerationRequest {
    GenerationRequest {
        prompt: prompt.text,
        temperature,
        max_output_chars,
        n,
        metadata: prompt.metadata,
    }
}

fn clamp_score(metric: MetricId, scored: Scored, flags: &mut Vec<String>, where_: &str) -> f64 {
    if let Some(flag) = scored.flag {
        flags.push(format!("{where_}: {flag}"));
    }
    let (lo, hi) = (metric.range_min(), metric.range_max());
    if scored.value.is_nan() || scored.value < lo || scored.value > hi {
        flags.push(format!("{where_}: score {} outside [{lo}, {hi}]", scored.value));
        if scored.value.is_nan() {
            return lo;
        }
        return scored.value.clamp(lo, hi);
    }
    scored.value
}

struct Row {
    backward: Vec<String>,
    scores: Vec<f64>,
    failed: bool,
    flags: Vec<String>,
}

/// Draws all forward and backward samples for one task and scores every pair.
///
/// Generation failures never abort the record: the affected cells are scored
/// at the metric minimum and listed in `failed_cells`.
pub fn run_round_trip<T: RoundTripTask + ?Sized>(
    task: &T,
    forward_gen: &dyn Generator,
    backward_gen: &dyn Generator,
    sim: &dyn Similarity<T>,
    cfg: &SamplingConfig,
) -> RoundTripRecord {
    let metric = sim.metric();
    let floor = metric.range_min();
    let mut flags = Vec::new();

    let forward_req = request(
        task.forward_prompt(),
        cfg.forward_temperature,
        cfg.max_forward_chars,
        cfg.n_forward,
    );
    let forward_samples: Vec<Option<String>> = match forward_gen.generate(&forward_req) {
        Ok(samples) if samples.len() == cfg.n_forward => samples
            .into_iter()
            .map(|s| {
                let s = truncate_at_boundary(s.trim(), cfg.max_forward_chars);
                (!s.trim().is_empty()).then_some(s)
            })
            .collect(),
        Ok(samples) => {
            flags.push(format!(
                "forward returned {} samples, expected {}",
                samples.len(),
                cfg.n_forward
            ));
            vec![None; cfg.n_forward]
        }
        Err(e) => {
            warn!("{}: forward generation failed: {e}", task.task_id());
            flags.push(format!("forward failed: {e}"));
            vec![None; cfg.n_forward]
        }
    };

    let rows: Vec<Row> = forward_samples
        .par_iter()
        .enumerate()
        .map(|(i, sample)| {
            let mut row_flags = Vec::new();
            let Some(description) = sample else {
                return Row {
                    backward: vec![String::new(); cfg.n_backward],
                    scores: vec![floor; cfg.n_backward],
                    failed: true,
                    flags: vec![format!("forward[{i}]: no usable description")],
                };
            };
            let req = request(
                task.backward_prompt(description, Direction::Backward),
                cfg.backward_temperature,
                cfg.max_backward_chars,
                cfg.n_backward,
            );
            match backward_gen.generate(&req) {
                Ok(outputs) if outputs.len() == cfg.n_backward => {
                    let scores = outputs
                        .iter()
                        .enumerate()
                        .map(|(j, out)| {
                            clamp_score(metric, sim.score(out, task), &mut row_flags, &format!("cell[{i}][{j}]"))
                        })
                        .collect();
                    Row {
                        backward: outputs,
                        scores,
                        failed: false,
                        flags: row_flags,
                    }
                }
                Ok(outputs) => Row {
                    backward: vec![String::new(); cfg.n_backward],
                    scores: vec![floor; cfg.n_backward],
                    failed: true,
                    flags: vec![format!(
                        "backward[{i}] returned {} samples, expected {}",
                        outputs.len(),
                        cfg.n_backward
                    )],
                },
                Err(e) => {
                    warn!("{}: backward generation {i} failed: {e}", task.task_id());
                    Row {
                        backward: vec![String::new(); cfg.n_backward],
                        scores: vec![floor; cfg.n_backward],
                        failed: true,
                        flags: vec![format!("backward[{i}] failed: {e}")],
                    }
                }
            }
        })
        .collect();

    let mut failed_cells = Vec::new();
    let mut backward_samples = Vec::with_capacity(rows.len());
    let mut sim_scores = Vec::with_capacity(rows.len());
    for (i, row) in rows.into_iter().enumerate() {
        if row.failed {
            failed_cells.extend((0..cfg.n_backward).map(|j| (i, j)));
        }
        flags.extend(row.flags);
        backward_samples.push(row.backward);
        sim_scores.push(row.scores);
    }

    RoundTripRecord {
        schema_version: SCHEMA_VERSION,
        task_id: task.task_id().to_string(),
        group: task.group().to_string(),
        model_id: forward_gen.model_id().to_string(),
        metric,
        forward_samples: forward_samples.into_iter().map(Option::unwrap_or_default).collect(),
        backward_samples,
        sim_scores,
        baseline_backward: None,
        baseline_scores: None,
        failed_cells,
        flags,
    }
}

/// Fills the baseline fields: `n_backward` backward samples conditioned on the
/// task's uninformative utterance, at the backward temperature.
pub fn run_baseline<T: RoundTripTask + ?Sized>(
    record: &mut RoundTripRecord,
    task: &T,
    backward_gen: &dyn Generator,
    sim: &dyn Similarity<T>,
    cfg: &SamplingConfig,
) {
    let metric = sim.metric();
    let req = request(
        task.backward_prompt(task.baseline_description(), Direction::Baseline),
        cfg.backward_temperature,
        cfg.max_backward_chars,
        cfg.n_backward,
    );
    let failure = match backward_gen.generate(&req) {
        Ok(outputs) if outputs.len() == cfg.n_backward => {
            let scores = outputs
                .iter()
                .enumerate()
                .map(|(j, out)| clamp_score(metric, sim.score(out, task), &mut record.flags, &format!("baseline[{j}]")))
                .collect();
            record.baseline_backward = Some(outputs);
            record.baseline_scores = Some(scores);
            None
        }
        Ok(o) => Some(format!("{} samples, expected {}", o.len(), cfg.n_backward)),
        Err(e) => Some(e.to_string()),
    };
    if let Some(why) = failure {
        warn!("{}: baseline generation failed: {why}", task.task_id());
        record.flags.push(format!("baseline failed: {why}"));
        record.baseline_backward = Some(vec![String::new(); cfg.n_backward]);
        record.baseline_scores = Some(vec![metric.range_min(); cfg.n_backward]);
    }
}

/// Re-scores the stored backward samples of `record` with another metric.
/// Failed cells stay at the new metric's minimum.
pub fn rescore<T: RoundTripTask + ?Sized>(
    record: &RoundTripRecord,
    task: &T,
    sim: &dyn Similarity<T>,
) -> RoundTripRecord {
    let metric = sim.metric();
    let mut flags: Vec<String> = record
        .flags
        .iter()
        .filter(|f| !f.starts_with("cell[") && !f.starts_with("baseline["))
        .cloned()
        .collect();
    let sim_scores = record
        .backward_samples
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, out)| {
                    if record.failed_cells.contains(&(i, j)) {
                        metric.range_min()
                    } else {
                        clamp_score(metric, sim.score(out, task), &mut flags, &format!("cell[{i}][{j}]"))
                    }
                })
                .collect()
        })
        .collect();
    let baseline_failed = record.flags.iter().any(|f| f.starts_with("baseline failed"));
    let baseline_scores = record.baseline_backward.as_ref().map(|outs| {
        outs.iter()
            .enumerate()
            .map(|(j, out)| {
                if baseline_failed {
                    metric.range_min()
                } else {
                    clamp_score(metric, sim.score(out, task), &mut flags, &format!("baseline[{j}]"))
                }
            })
            .collect()
    });
    RoundTripRecord {
        metric,
        sim_scores,
        baseline_scores,
        flags,
        ..record.clone()
    }
}

/// Runs every task (and its baseline when asked) on a pool of `parallelism`
/// threads. Output order follows input order.
pub fn evaluate_tasks<T: RoundTripTask>(
    tasks: &[T],
    forward_gen: &dyn Generator,
    backward_gen: &dyn Generator,
    sim: &dyn Similarity<T>,
    cfg: &SamplingConfig,
    with_baseline: bool,
    parallelism: usize,
) -> Vec<RoundTripRecord> {
    let run = || {
        tasks
            .par_iter()
            .map(|task| {
                let mut record = run_round_trip(task, forward_gen, backward_gen, sim, cfg);
                if with_baseline {
                    run_baseline(&mut record, task, backward_gen, sim, cfg);
                }
                record
            })
            .collect()
    };
    match rayon::ThreadPoolBuilder::new().num_threads(parallelism.max(1)).build() {
        Ok(pool) => pool.install(run),
        Err(e) => {
            warn!("could not build a thread pool ({e}); running on the global pool");
            run()
        }
    }
}

/// Sum after sorting, so the result does not depend on input order.
fn order_free_mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let mut v: Vec<f64> = values.collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    Some(v.iter().sum::<f64>() / v.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RtcEstimate {
    pub task_id: String,
    pub rtc: f64,
    pub n_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftEstimate {
    pub task_id: String,
    pub lift: f64,
}

/// Mean over all `n_forward x n_backward` cells.
pub fn estimate_rtc(record: &RoundTripRecord) -> Result<RtcEstimate, EngineError> {
    let n_pairs = record.sim_scores.iter().map(Vec::len).sum();
    let rtc = order_free_mean(record.sim_scores.iter().flatten().copied())
        .ok_or_else(|| EngineError::EmptyScores(record.task_id.clone()))?;
    Ok(RtcEstimate {
        task_id: record.task_id.clone(),
        rtc,
        n_pairs,
    })
}

/// RTC minus the mean baseline score. Negative values are meaningful.
pub fn estimate_lift(record: &RoundTripRecord) -> Result<LiftEstimate, EngineError> {
    let baseline = record
        .baseline_scores
        .as_ref()
        .and_then(|s| order_free_mean(s.iter().copied()))
        .ok_or_else(|| EngineError::MissingBaseline(record.task_id.clone()))?;
    let rtc = estimate_rtc(record)?.rtc;
    Ok(LiftEstimate {
        task_id: record.task_id.clone(),
        lift: rtc - baseline,
    })
}

/// Per-task estimate tagged with its aggregation key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedEstimate {
    pub group: String,
    pub rtc: f64,
    pub lift: Option<f64>,
}

impl GroupedEstimate {
    pub fn from_record(record: &RoundTripRecord) -> Result<Self, EngineError> {
        Ok(Self {
            group: record.group.clone(),
            rtc: estimate_rtc(record)?.rtc,
            lift: match record.baseline_scores {
                Some(_) => Some(estimate_lift(record)?.lift),
                None => None,
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub n: usize,
    pub mean_rtc: f64,
    /// Mean over the estimates that carry a lift; `None` if none do.
    pub mean_lift: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateSummary {
    pub groups: BTreeMap<String, GroupSummary>,
    pub overall: Option<GroupSummary>,
}

fn summarize<'a>(items: impl Iterator<Item = &'a GroupedEstimate> + Clone) -> Option<GroupSummary> {
    let n = items.clone().count();
    let mean_rtc = order_free_mean(items.clone().map(|e| e.rtc))?;
    let mean_lift = order_free_mean(items.filter_map(|e| e.lift));
    Some(GroupSummary { n, mean_rtc, mean_lift })
}

/// Arithmetic means per group and over all estimates (not a mean of group means).
pub fn aggregate(estimates: &[GroupedEstimate]) -> AggregateSummary {
    let mut by_group: BTreeMap<&str, Vec<&GroupedEstimate>> = BTreeMap::new();
    for e in estimates {
        by_group.entry(&e.group).or_default().push(e);
    }
    let groups = by_group
        .into_iter()
        .filter_map(|(g, items)| summarize(items.into_iter()).map(|s| (g.to_string(), s)))
        .collect();
    AggregateSummary {
        groups,
        overall: summarize(estimates.iter()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{GatewayError, ModelKind, ModelSpec, OracleModel};
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn record_with(scores: Vec<Vec<f64>>) -> RoundTripRecord {
        let nf = scores.len();
        let nb = scores.first().map_or(0, Vec::len);
        RoundTripRecord {
            schema_version: SCHEMA_VERSION,
            task_id: "t".into(),
            group: "g".into(),
            model_id: "m".into(),
            metric: MetricId::Pass,
            forward_samples: vec![String::new(); nf],
            backward_samples: vec![vec![String::new(); nb]; nf],
            sim_scores: scores,
            baseline_backward: None,
            baseline_scores: None,
            failed_cells: vec![],
            flags: vec![],
        }
    }

    #[test]
    fn rtc_is_the_cell_mean() {
        assert_eq!(estimate_rtc(&record_with(vec![vec![1.0], vec![0.0], vec![0.0]])).unwrap().rtc, 1.0 / 3.0);
        let est = estimate_rtc(&record_with(vec![vec![1.0, 0.0], vec![1.0, 1.0]])).unwrap();
        assert_eq!(est.rtc, 0.75);
        assert_eq!(est.n_pairs, 4);
        assert!(matches!(estimate_rtc(&record_with(vec![])), Err(EngineError::EmptyScores(_))));
    }

    #[test]
    fn lift_cases() {
        let mut r = record_with(vec![vec![0.5]]);
        assert!(matches!(estimate_lift(&r), Err(EngineError::MissingBaseline(_))));
        r.baseline_scores = Some(vec![0.3]);
        assert!((estimate_lift(&r).unwrap().lift - 0.2).abs() < 1e-15);
        let mut zero = record_with(vec![vec![0.0]]);
        zero.baseline_scores = Some(vec![0.0]);
        assert_eq!(estimate_lift(&zero).unwrap().lift, 0.0);
        let mut neg = record_with(vec![vec![1.0], vec![0.0], vec![0.0]]);
        neg.baseline_scores = Some(vec![1.0]);
        assert_eq!(estimate_lift(&neg).unwrap().lift, 1.0 / 3.0 - 1.0);
    }

    #[test]
    fn aggregate_groups() {
        let e = |g: &str, rtc: f64| GroupedEstimate {
            group: g.into(),
            rtc,
            lift: None,
        };
        let one = aggregate(&[e("a", 0.0), e("a", 1.0)]);
        assert_eq!(one.groups["a"].mean_rtc, 0.5);
        let two = aggregate(&[e("A", 1.0), e("A", 1.0), e("B", 0.0)]);
        assert_eq!(two.groups["A"].mean_rtc, 1.0);
        assert_eq!(two.groups["B"].mean_rtc, 0.0);
        assert_eq!(two.groups["A"].n, 2);
        assert_eq!(two.overall.unwrap().mean_rtc, 2.0 / 3.0);
        assert!(aggregate(&[]).overall.is_none());
    }

    #[test]
    fn config_defaults_and_validation() {
        let s = SamplingConfig::synthesis_defaults();
        assert_eq!((s.n_forward, s.n_backward, s.max_forward_chars), (3, 1, 128));
        assert_eq!((s.forward_temperature, s.backward_temperature), (0.8, 0.1));
        let e = SamplingConfig::editing_defaults();
        assert_eq!((e.forward_temperature, e.backward_temperature), (1.0, 0.0));
        let mut bad = s.clone();
        bad.n_backward = 0;
        assert!(bad.validate().is_err());
        bad = s.clone();
        bad.forward_temperature = -1.0;
        assert!(bad.validate().is_err());
    }

    struct ToyTask;

    impl RoundTripTask for ToyTask {
        fn task_id(&self) -> &str {
            "toy"
        }
        fn group(&self) -> &str {
            "proj"
        }
        fn forward_prompt(&self) -> Prompt {
            Prompt {
                text: "describe".into(),
                metadata: RequestMetadata {
                    task_id: "toy".into(),
                    direction: Some(Direction::Forward),
                    ..Default::default()
                },
            }
        }
        fn backward_prompt(&self, description: &str, direction: Direction) -> Prompt {
            Prompt {
                text: format!("implement: {description}"),
                metadata: RequestMetadata {
                    task_id: "toy".into(),
                    direction: Some(direction),
                    reference: Some("x".into()),
                    description: Some(description.into()),
                    ..Default::default()
                },
            }
        }
        fn baseline_description(&self) -> &str {
            "Implement."
        }
    }

    struct ConstSim(f64);

    impl Similarity<ToyTask> for ConstSim {
        fn metric(&self) -> MetricId {
            MetricId::Pass
        }
        fn score(&self, _: &str, _: &ToyTask) -> Scored {
            Scored::clean(self.0)
        }
    }

    /// Fails the first `fail` calls, then answers like the oracle.
    struct Flaky {
        fail: usize,
        calls: AtomicUsize,
        inner: OracleModel,
    }

    impl Generator for Flaky {
        fn model_id(&self) -> &str {
            "flaky"
        }
        fn generate(&self, r: &GenerationRequest) -> Result<Vec<String>, GatewayError> {
            if self.calls.fetch_add(1, Ordering::SeqCst) < self.fail {
                return Err(GatewayError::Exhausted {
                    attempts: 4,
                    last: "boom".into(),
                });
            }
            self.inner.generate(r)
        }
    }

    #[test]
    fn constant_similarity_gives_constant_rtc() {
        let oracle = OracleModel::new(&ModelSpec::mock(ModelKind::MockOracle));
        let mut cfg = SamplingConfig::synthesis_defaults();
        cfg.n_backward = 2;
        let rec = run_round_trip(&ToyTask, &oracle, &oracle, &ConstSim(1.0), &cfg);
        assert!(rec.is_well_formed(&cfg));
        assert_eq!(estimate_rtc(&rec).unwrap().rtc, 1.0);
        assert_eq!(rec.group, "proj");
    }

    #[test]
    fn failed_forward_scores_minimum_for_whole_record() {
        let flaky = Flaky {
            fail: 1,
            calls: AtomicUsize::new(0),
            inner: OracleModel::new(&ModelSpec::mock(ModelKind::MockOracle)),
        };
        let cfg = SamplingConfig::synthesis_defaults();
        let rec = run_round_trip(&ToyTask, &flaky, &flaky, &ConstSim(1.0), &cfg);
        assert!(rec.is_well_formed(&cfg));
        assert_eq!(rec.failed_cells.len(), 3);
        assert_eq!(estimate_rtc(&rec).unwrap().rtc, 0.0);
        assert!(rec.has_failures());
    }

    #[test]
    fn failed_backward_only_hits_its_row() {
        let oracle = OracleModel::new(&ModelSpec::mock(ModelKind::MockOracle));
        let flaky = Flaky {
            fail: 1,
            calls: AtomicUsize::new(0),
            inner: OracleModel::new(&ModelSpec::mock(ModelKind::MockOracle)),
        };
        let mut cfg = SamplingConfig::synthesis_defaults();
        cfg.n_forward = 1;
        let rec = run_round_trip(&ToyTask, &oracle, &flaky, &ConstSim(1.0), &cfg);
        assert_eq!(rec.failed_cells, vec![(0, 0)]);
        assert_eq!(rec.sim_scores, vec![vec![0.0]]);
    }

    #[test]
    fn baseline_fills_n_backward_scores() {
        let oracle = OracleModel::new(&ModelSpec::mock(ModelKind::MockOracle));
        let mut cfg = SamplingConfig::synthesis_defaults();
        cfg.n_backward = 2;
        let mut rec = run_round_trip(&ToyTask, &oracle, &oracle, &ConstSim(1.0), &cfg);
        run_baseline(&mut rec, &ToyTask, &oracle, &ConstSim(1.0), &cfg);
        assert_eq!(rec.baseline_scores, Some(vec![1.0, 1.0]));
        assert_eq!(estimate_lift(&rec).unwrap().lift, 0.0);
    }

    #[test]
    fn out_of_range_scores_are_clamped_and_flagged() {
        let oracle = OracleModel::new(&ModelSpec::mock(ModelKind::MockOracle));
        let mut cfg = SamplingConfig::synthesis_defaults();
        cfg.n_forward = 1;
        let rec = run_round_trip(&ToyTask, &oracle, &oracle, &ConstSim(3.0), &cfg);
        assert_eq!(rec.sim_scores, vec![vec![1.0]]);
        assert_eq!(rec.flags.len(), 1);
    }

    #[test]
    fn records_round_trip_through_json() {
        let mut rec = record_with(vec![vec![1.0, 0.0]]);
        rec.failed_cells = vec![(0, 1)];
        let text = serde_json::to_string(&rec).unwrap();
        assert!(text.contains("\"schema_version\":1"));
        assert_eq!(serde_json::from_str::<RoundTripRecord>(&text).unwrap(), rec);
    }
}
