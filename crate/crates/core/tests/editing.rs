//! EditingRtc on the remote_shutdown edit and a small edit set.

mod common;

use rtc_core::editing::{
    baseline_edit_description, extract_new_code, load_edit_tasks, make_edit_backward_prompt, make_edit_forward_prompt,
    score_exact_match, supervised_description_bleu, supervised_edit_generation, EditSimilarity, EditTask,
    BASELINE_EDIT_DESCRIPTION,
};
use rtc_core::engine::{estimate_lift, estimate_rtc, evaluate_tasks, rescore, RoundTripTask};
use rtc_core::gateway::{build_generator, Direction, MockScript, ModelKind, ModelSpec};
use rtc_core::similarity::{bleu, MetricId, Normalization};
use rtc_core::synthesis::prompts::todo_comment;
use rtc_core::synthesis::BASELINE_DESCRIPTION;
use rtc_core::SamplingConfig;

fn shutdown_task() -> EditTask {
    let mut tasks = load_edit_tasks(&common::fixture("remote_shutdown_edit.jsonl")).unwrap();
    assert_eq!(tasks.len(), 1);
    tasks.remove(0)
}

fn scripted() -> ModelSpec {
    ModelSpec {
        script_path: Some(common::fixture("remote_shutdown_script.json")),
        ..ModelSpec::mock(ModelKind::MockScripted)
    }
}

fn em() -> EditSimilarity {
    EditSimilarity::new(MetricId::ExactMatch, Normalization::Standard).unwrap()
}

fn editing_cfg() -> SamplingConfig {
    SamplingConfig {
        n_forward: 3,
        n_backward: 1,
        ..SamplingConfig::editing_defaults()
    }
}

#[test]
fn address_edit_round_trip_scores_100() {
    let task = shutdown_task();
    let model = build_generator(&scripted()).unwrap();
    let records = evaluate_tasks(std::slice::from_ref(&task), &*model, &*model, &em(), &editing_cfg(), true, 1);
    let r = &records[0];
    assert_eq!(r.sim_scores, vec![vec![100.0], vec![100.0], vec![100.0]]);
    assert_eq!(estimate_rtc(r).unwrap().rtc, 100.0);
    assert_eq!(r.baseline_scores, Some(vec![0.0]));
    assert_eq!(estimate_lift(r).unwrap().lift, 100.0);
    assert!(r.flags.is_empty(), "{:?}", r.flags);
}

#[test]
fn echo_of_the_old_code_scores_zero() {
    let task = shutdown_task();
    let echo = build_generator(&ModelSpec::mock(ModelKind::MockEcho)).unwrap();
    let records = evaluate_tasks(std::slice::from_ref(&task), &*echo, &*echo, &em(), &editing_cfg(), true, 1);
    assert_eq!(estimate_rtc(&records[0]).unwrap().rtc, 0.0);
    assert_eq!(estimate_lift(&records[0]).unwrap().lift, 0.0);
    assert_eq!(records[0].backward_samples[0][0], task.old_code);
}

#[test]
fn placeholders_are_the_exact_literals() {
    assert_eq!(BASELINE_EDIT_DESCRIPTION.as_bytes(), b"Edit.");
    assert_eq!(baseline_edit_description().as_bytes(), b"Edit.");
    assert_eq!(shutdown_task().baseline_description(), "Edit.");
    assert_eq!(todo_comment("", BASELINE_DESCRIPTION).as_bytes(), b"# TODO: Implement.");
    let baseline = shutdown_task().backward_prompt("Edit.", Direction::Baseline).text;
    assert!(baseline.ends_with("[edit description]\nEdit.\n[new]\n"));
}

#[test]
fn forward_prompt_shows_both_versions() {
    let task = shutdown_task();
    let p = make_edit_forward_prompt(&task.old_code, &task.new_code);
    assert!(p.contains("\"localhost\"") && p.contains("\"127.0.0.1\""));
    let tail = format!("[old]\n{}\n[new]\n{}\n[edit description]\n", task.old_code, task.new_code);
    assert!(p.ends_with(&tail));
    assert_eq!(p, make_edit_forward_prompt(&task.old_code, &task.new_code));
    let mirrored = make_edit_forward_prompt(&task.new_code, &task.old_code);
    assert!(mirrored.ends_with(&format!("[old]\n{}\n[new]\n{}\n[edit description]\n", task.new_code, task.old_code)));
}

#[test]
fn backward_prompt_asks_for_the_new_block() {
    let task = shutdown_task();
    let p = make_edit_backward_prompt(&task.old_code, "Please replace \"localhost\" with \"127.0.0.1\".");
    assert!(p.ends_with(&format!(
        "[old]\n{}\n[edit description]\nPlease replace \"localhost\" with \"127.0.0.1\".\n[new]\n",
        task.old_code
    )));
    assert!(!p.ends_with(&format!("{}\n", task.new_code)));
}

#[test]
fn supervised_edit_from_the_review_comment_does_not_match() {
    let task = shutdown_task();
    let model = build_generator(&scripted()).unwrap();
    let score = supervised_edit_generation(&task, &*model, Normalization::Standard, 4096).unwrap();
    assert_eq!(score.unwrap().value, 0);
    let oracle = build_generator(&ModelSpec::mock(ModelKind::MockOracle)).unwrap();
    assert_eq!(supervised_edit_generation(&task, &*oracle, Normalization::Standard, 4096).unwrap().unwrap().value, 1);
    let echo = build_generator(&ModelSpec::mock(ModelKind::MockEcho)).unwrap();
    assert_eq!(supervised_edit_generation(&task, &*echo, Normalization::Standard, 4096).unwrap().unwrap().value, 0);
}

#[test]
fn description_bleu_against_the_review_comment() {
    let task = shutdown_task();
    let script = MockScript::load(&common::fixture("remote_shutdown_script.json")).unwrap();
    let comment = task.reference_comment.clone().unwrap();
    let descriptions = &script.tasks[&task.task_id].forward;
    let scores: Vec<f64> = descriptions.iter().map(|d| bleu(d, &comment)).collect();
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    // The descriptions share almost no n-grams with the comment.
    assert!((0.0..5.0).contains(&mean), "mean description BLEU {mean}");
    println!("description BLEU per description {scores:?}, mean {mean:.3}");

    let model = build_generator(&scripted()).unwrap();
    let (first, score) = supervised_description_bleu(&task, &*model, 128).unwrap().unwrap();
    assert_eq!(first, descriptions[0]);
    assert_eq!(score, scores[0]);
    assert_eq!(bleu(&comment, &comment), 100.0);
}

#[test]
fn oracle_scores_100_and_lift_is_rtc_minus_baseline() {
    let tasks = load_edit_tasks(&common::fixture("edits_small.jsonl")).unwrap();
    let oracle = build_generator(&ModelSpec::mock(ModelKind::MockOracle)).unwrap();
    let records = evaluate_tasks(&tasks, &*oracle, &*oracle, &em(), &editing_cfg(), true, 2);
    for r in &records {
        let rtc = estimate_rtc(r).unwrap().rtc;
        assert_eq!(rtc, 100.0);
        let base = r.baseline_scores.as_ref().unwrap();
        let base_mean = base.iter().sum::<f64>() / base.len() as f64;
        assert_eq!(estimate_lift(r).unwrap().lift, rtc - base_mean);
    }
}

#[test]
fn copying_the_old_code_scores_high_under_text_metrics() {
    let tasks = load_edit_tasks(&common::fixture("edits_small.jsonl")).unwrap();
    let echo = build_generator(&ModelSpec::mock(ModelKind::MockEcho)).unwrap();
    let records = evaluate_tasks(&tasks, &*echo, &*echo, &em(), &editing_cfg(), true, 1);
    let sim = EditSimilarity::new(MetricId::Bleu, Normalization::Standard).unwrap();
    let mut baseline_bleu = Vec::new();
    for (r, t) in records.iter().zip(&tasks) {
        assert_eq!(estimate_rtc(r).unwrap().rtc, 0.0, "{}", t.task_id);
        let b = rescore(r, t, &sim);
        baseline_bleu.extend(b.baseline_scores.unwrap());
        assert!((bleu(&t.old_code, &t.new_code) - b.sim_scores[0][0]).abs() < 1e-9);
    }
    let mean = baseline_bleu.iter().sum::<f64>() / baseline_bleu.len() as f64;
    assert!(mean > 50.0, "copy-old baseline BLEU {mean}");
    let rouge = EditSimilarity::new(MetricId::RougeL, Normalization::Standard).unwrap();
    assert!(records.iter().zip(&tasks).all(|(r, t)| rescore(r, t, &rouge).baseline_scores.unwrap()[0] > 50.0));
}

#[test]
fn exact_match_normalizes_cosmetics_only() {
    let task = shutdown_task();
    let padded = format!("\n\n{}   \r\n\n", task.new_code.replace('\n', "  \r\n"));
    assert_eq!(score_exact_match(&padded, &task, Normalization::Standard).value, 1);
    assert_eq!(score_exact_match(&padded, &task, Normalization::Strict).value, 0);
    assert_eq!(score_exact_match(&task.old_code, &task, Normalization::Standard).value, 0);
    let fenced = format!("[new]\n```python\n{}\n```\n", task.new_code);
    assert_eq!(extract_new_code(&fenced), task.new_code);
    assert!(EditSimilarity::new(MetricId::Pass, Normalization::Standard).is_none());
}
