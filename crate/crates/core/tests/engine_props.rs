//! Arithmetic properties of the RTC and lift estimators, run through the
//! real sampling loop with a table-driven model and similarity.

use proptest::prelude::*;
use proptest::test_runner::Config;
use rtc_core::engine::{
    aggregate, estimate_lift, estimate_rtc, run_baseline, run_round_trip, GroupedEstimate, Prompt, RoundTripTask,
    Scored, Similarity,
};
use rtc_core::gateway::{Direction, GatewayError, GenerationRequest, Generator, RequestMetadata};
use rtc_core::similarity::MetricId;
use rtc_core::SamplingConfig;

/// A task whose score for backward sample `j` of forward sample `i` is
/// `matrix[i][j]`, and whose baseline sample `j` scores `baseline[j]`.
struct TableTask {
    matrix: Vec<Vec<f64>>,
    baseline: Vec<f64>,
}

impl RoundTripTask for TableTask {
    fn task_id(&self) -> &str {
        "table"
    }

    fn group(&self) -> &str {
        "g"
    }

    fn forward_prompt(&self) -> Prompt {
        Prompt {
            text: "forward".into(),
            metadata: RequestMetadata::default(),
        }
    }

    fn backward_prompt(&self, description: &str, direction: Direction) -> Prompt {
        Prompt {
            text: description.to_string(),
            metadata: RequestMetadata {
                direction: Some(direction),
                ..RequestMetadata::default()
            },
        }
    }

    fn baseline_description(&self) -> &str {
        "baseline"
    }
}

/// Forward sample `i` is `"i"`; backward sample `j` for description `d` is `"d,j"`.
struct IndexModel;

impl Generator for IndexModel {
    fn model_id(&self) -> &str {
        "index"
    }

    fn generate(&self, request: &GenerationRequest) -> Result<Vec<String>, GatewayError> {
        Ok((0..request.n)
            .map(|j| {
                if request.metadata.direction.is_none() {
                    j.to_string()
                } else {
                    format!("{},{j}", request.prompt)
                }
            })
            .collect())
    }
}

struct TableSim;

impl Similarity<TableTask> for TableSim {
    fn metric(&self) -> MetricId {
        MetricId::Pass
    }

    fn score(&self, candidate: &str, task: &TableTask) -> Scored {
        let (row, col) = candidate.split_once(',').unwrap();
        let col: usize = col.parse().unwrap();
        Scored::clean(match row {
            "baseline" => task.baseline[col],
            i => task.matrix[i.parse::<usize>().unwrap()][col],
        })
    }
}

fn cfg(nf: usize, nb: usize) -> SamplingConfig {
    SamplingConfig {
        n_forward: nf,
        n_backward: nb,
        ..SamplingConfig::synthesis_defaults()
    }
}

fn record_for(task: &TableTask) -> rtc_core::RoundTripRecord {
    let c = cfg(task.matrix.len(), task.matrix[0].len());
    let mut r = run_round_trip(task, &IndexModel, &IndexModel, &TableSim, &c);
    run_baseline(&mut r, task, &IndexModel, &TableSim, &c);
    assert!(r.is_well_formed(&c));
    r
}

fn rtc_of(matrix: Vec<Vec<f64>>) -> f64 {
    let nb = matrix[0].len();
    estimate_rtc(&record_for(&TableTask { matrix, baseline: vec![0.0; nb] })).unwrap().rtc
}

fn unit_matrix() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..6, 1usize..6).prop_flat_map(|(nf, nb)| prop::collection::vec(prop::collection::vec(0.0f64..=1.0, nb), nf))
}

fn binary_matrix() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..6, 1usize..6).prop_flat_map(|(nf, nb)| {
        prop::collection::vec(prop::collection::vec(prop::bool::ANY.prop_map(f64::from), nb), nf)
    })
}

proptest! {
    #![proptest_config(Config::with_cases(1000))]

    #[test]
    fn rtc_is_invariant_under_sample_permutation(
        matrix in unit_matrix(), row_seed in any::<u64>(), col_seed in any::<u64>()
    ) {
        let nf = matrix.len();
        let nb = matrix[0].len();
        let mut rows: Vec<usize> = (0..nf).collect();
        let mut cols: Vec<usize> = (0..nb).collect();
        rows.sort_by_key(|i| (i.wrapping_mul(2654435761) ^ row_seed as usize) % 1009);
        cols.sort_by_key(|j| (j.wrapping_mul(40503) ^ col_seed as usize) % 1013);
        let permuted: Vec<Vec<f64>> = rows.iter().map(|&i| cols.iter().map(|&j| matrix[i][j]).collect()).collect();
        prop_assert_eq!(rtc_of(matrix).to_bits(), rtc_of(permuted).to_bits());
    }

    #[test]
    fn rtc_is_linear_in_the_similarity_and_bounded(matrix in unit_matrix()) {
        let flipped: Vec<Vec<f64>> = matrix.iter().map(|r| r.iter().map(|s| 1.0 - s).collect()).collect();
        let a = rtc_of(matrix.clone());
        let b = rtc_of(flipped);
        prop_assert!((a + b - 1.0).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&a));
        let lo = matrix.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        let hi = matrix.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo - 1e-12 <= a && a <= hi + 1e-12);
    }

    #[test]
    fn binary_rtc_is_the_exact_fraction_of_passing_pairs(matrix in binary_matrix()) {
        let n = matrix.len() * matrix[0].len();
        let k = matrix.iter().flatten().filter(|s| **s == 1.0).count();
        prop_assert_eq!(rtc_of(matrix), k as f64 / n as f64);
    }

    #[test]
    fn single_sample_rtc_is_that_sample(s in 0.0f64..=1.0) {
        prop_assert_eq!(rtc_of(vec![vec![s]]), s);
        prop_assert_eq!(rtc_of(vec![vec![s]]), rtc_of(vec![vec![s]]));
    }

    #[test]
    fn lift_is_rtc_minus_baseline_mean(matrix in unit_matrix(), base in prop::collection::vec(0.0f64..=1.0, 1..6)) {
        let nb = matrix[0].len();
        let baseline: Vec<f64> = (0..nb).map(|j| base[j % base.len()]).collect();
        let record = record_for(&TableTask { matrix, baseline: baseline.clone() });
        let rtc = estimate_rtc(&record).unwrap().rtc;
        let lift = estimate_lift(&record).unwrap().lift;
        let mut sorted = baseline.clone();
        sorted.sort_by(f64::total_cmp);
        let mean = sorted.iter().sum::<f64>() / nb as f64;
        prop_assert_eq!(lift, rtc - mean);
    }
}

#[test]
fn one_pass_out_of_three_is_exactly_one_third() {
    assert_eq!(rtc_of(vec![vec![1.0], vec![0.0], vec![0.0]]), 1.0 / 3.0);
}

#[test]
fn aggregate_is_a_mean_over_tasks_not_groups() {
    let est = |group: &str, rtc: f64| GroupedEstimate {
        group: group.into(),
        rtc,
        lift: None,
    };
    let summary = aggregate(&[est("a", 1.0), est("a", 1.0), est("a", 1.0), est("b", 0.0)]);
    assert_eq!(summary.overall.as_ref().unwrap().mean_rtc, 0.75);
    assert_eq!(summary.groups["a"].mean_rtc, 1.0);
    assert_eq!(summary.groups["b"].n, 1);
    assert!(summary.overall.unwrap().mean_lift.is_none());
}

struct FailingBackward;

impl Generator for FailingBackward {
    fn model_id(&self) -> &str {
        "failing"
    }

    fn generate(&self, _: &GenerationRequest) -> Result<Vec<String>, GatewayError> {
        Err(GatewayError::Script("unavailable".into()))
    }
}

#[test]
fn failed_backward_calls_score_the_floor_and_are_listed() {
    let task = TableTask {
        matrix: vec![vec![1.0, 1.0]; 2],
        baseline: vec![1.0; 2],
    };
    let c = cfg(2, 2);
    let r = run_round_trip(&task, &IndexModel, &FailingBackward, &TableSim, &c);
    assert!(r.is_well_formed(&c));
    assert_eq!(r.failed_cells, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
    assert_eq!(estimate_rtc(&r).unwrap().rtc, 0.0);
    assert!(r.has_failures());
}
