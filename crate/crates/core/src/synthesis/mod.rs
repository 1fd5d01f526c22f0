//! SynthesisRtc: describe a code region, regenerate it from a TODO comment
//! carrying the description, and score the result with the unit-test oracle.

pub mod humaneval;
pub mod prompts;

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::{ProjectManifest, RegionTask};
use crate::engine::{Prompt, RoundTripTask, Scored, Similarity};
use crate::gateway::{Direction, RequestMetadata};
use crate::sandbox::SandboxRunner;
use crate::similarity::MetricId;
use crate::text::leading_indent;

pub use humaneval::{adapt as adapt_humaneval, load_units as load_humaneval, HumanEvalProblem, HumanEvalUnit};
pub use prompts::{
    baseline_input, extract_region_candidate, make_backward_prompt, make_forward_prompt, splice_todo, BackwardInput,
    BASELINE_DESCRIPTION,
};

pub const HUMANEVAL_GROUP: &str = "humaneval";

/// Anything the pass oracle can evaluate: a corpus region or a HumanEval problem.
#[derive(Debug, Clone)]
pub enum SynthesisUnit {
    Region {
        task: RegionTask,
        project: Arc<ProjectManifest>,
    },
    HumanEval(HumanEvalUnit),
}

impl SynthesisUnit {
    pub fn task_id(&self) -> &str {
        match self {
            SynthesisUnit::Region { task, .. } => &task.task_id,
            SynthesisUnit::HumanEval(u) => &u.task_id,
        }
    }

    pub fn group(&self) -> &str {
        match self {
            SynthesisUnit::Region { task, .. } => &task.project_id,
            SynthesisUnit::HumanEval(_) => HUMANEVAL_GROUP,
        }
    }

    pub fn region_text(&self) -> &str {
        match self {
            SynthesisUnit::Region { task, .. } => &task.region_text,
            SynthesisUnit::HumanEval(u) => &u.region_text,
        }
    }

    pub fn context_before(&self) -> &str {
        match self {
            SynthesisUnit::Region { task, .. } => &task.context_before,
            SynthesisUnit::HumanEval(u) => &u.context_before,
        }
    }

    pub fn context_after(&self) -> &str {
        match self {
            SynthesisUnit::Region { task, .. } => &task.context_after,
            SynthesisUnit::HumanEval(u) => &u.context_after,
        }
    }

    pub fn indent(&self) -> &str {
        leading_indent(self.region_text())
    }

    pub fn forward_text(&self) -> String {
        make_forward_prompt(self.context_before(), self.region_text(), self.context_after())
    }

    pub fn backward_input(&self, description: &str) -> BackwardInput {
        splice_todo(self.context_before(), self.region_text(), self.context_after(), description)
    }

    fn metadata(&self, direction: Direction, description: Option<&str>) -> RequestMetadata {
        RequestMetadata {
            task_id: self.task_id().to_string(),
            direction: Some(direction),
            reference: Some(self.region_text().to_string()),
            source_code: None,
            description: description.map(str::to_string),
        }
    }
}

impl RoundTripTask for SynthesisUnit {
    fn task_id(&self) -> &str {
        SynthesisUnit::task_id(self)
    }

    fn group(&self) -> &str {
        SynthesisUnit::group(self)
    }

    fn forward_prompt(&self) -> Prompt {
        Prompt {
            text: self.forward_text(),
            metadata: self.metadata(Direction::Forward, None),
        }
    }

    fn backward_prompt(&self, description: &str, direction: Direction) -> Prompt {
        Prompt {
            text: make_backward_prompt(&self.backward_input(description)),
            metadata: self.metadata(direction, Some(description)),
        }
    }

    fn baseline_description(&self) -> &str {
        BASELINE_DESCRIPTION
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassScore {
    /// 1 iff the suite passed with the candidate spliced in.
    pub value: u8,
    /// Worktree (or scratch run) the verdict came from.
    pub test_report_ref: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<String>,
}

impl PassScore {
    fn zero(test_report_ref: impl Into<String>, flag: impl Into<String>) -> Self {
        Self {
            value: 0,
            test_report_ref: test_report_ref.into(),
            flag: Some(flag.into()),
        }
    }
}

/// Splices `candidate` over the unit's region in a fresh worktree and runs
/// the unit's tests. Sandbox failures score 0 with a flag.
pub fn evaluate_pass(candidate: &str, unit: &SynthesisUnit, runner: &SandboxRunner) -> PassScore {
    match unit {
        SynthesisUnit::Region { task, project } => {
            let mut wt = match runner.acquire_worktree(project) {
                Ok(wt) => wt,
                Err(e) => return PassScore::zero("", format!("sandbox: {e}")),
            };
            let id = wt.id().to_string();
            if let Err(e) = wt.apply_splice(Path::new(&task.file), task.byte_span, candidate) {
                return PassScore::zero(id, format!("splice: {e}"));
            }
            let report = runner.run_tests(&wt, &task.test_command);
            PassScore {
                value: u8::from(report.all_pass()),
                test_report_ref: id,
                flag: report.timed_out.then(|| "timeout".to_string()),
            }
        }
        SynthesisUnit::HumanEval(u) => match humaneval::run_check(u, candidate, runner, runner.config().timeout) {
            Ok((passed, timed_out)) => PassScore {
                value: u8::from(passed),
                test_report_ref: u.task_id.clone(),
                flag: timed_out.then(|| "timeout".to_string()),
            },
            Err(e) => PassScore::zero(u.task_id.clone(), format!("sandbox: {e}")),
        },
    }
}

/// The pass oracle as an engine similarity: extract, splice, run.
pub struct PassSimilarity<'r> {
    pub runner: &'r SandboxRunner,
}

impl Similarity<SynthesisUnit> for PassSimilarity<'_> {
    fn metric(&self) -> MetricId {
        MetricId::Pass
    }

    fn score(&self, candidate: &str, unit: &SynthesisUnit) -> Scored {
        let code = extract_region_candidate(candidate, unit.indent());
        if code.is_empty() {
            return Scored::flagged(0.0, "empty extraction");
        }
        let score = evaluate_pass(&code, unit, self.runner);
        Scored {
            value: f64::from(score.value),
            flag: score.flag,
        }
    }
}
