//! EditingRtc: describe an old-to-new edit, re-apply it to the old code from
//! the description alone, and compare with the real new code.
//!
//! Also hosts the two supervised comparisons: edit generation from a
//! reference comment, and BLEU of a greedy description against that comment.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{read_jsonl_file, CorpusError};
use crate::engine::{Prompt, RoundTripTask, Scored, Similarity};
use crate::gateway::{Direction, GatewayError, GenerationRequest, Generator, RequestMetadata};
use crate::similarity::{bleu, exact_match, text_metric, MetricId, Normalization};
use crate::text::{strip_code_fences, trim_blank_lines, truncate_at_boundary};

/// Uninformative edit description used for the baseline run.
pub const BASELINE_EDIT_DESCRIPTION: &str = "Edit.";

pub const OLD_MARKER: &str = "[old]";
pub const NEW_MARKER: &str = "[new]";
pub const DESCRIPTION_MARKER: &str = "[edit description]";

const FORWARD_INSTRUCTION: &str =
    "Each example shows a code snippet before ([old]) and after ([new]) a change. Summarize the change in one short sentence.";

const BACKWARD_INSTRUCTION: &str = "Each example shows a code snippet ([old]) and a requested change. Rewrite the \
snippet with the change applied and answer with the complete new snippet.";

pub fn baseline_edit_description() -> &'static str {
    BASELINE_EDIT_DESCRIPTION
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditTask {
    pub task_id: String,
    pub old_code: String,
    pub new_code: String,
    #[serde(default = "default_language")]
    pub language_tag: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_comment: Option<String>,
}

fn default_language() -> String {
    "python".into()
}

#[derive(Debug, Error)]
pub enum EditError {
    #[error("task `{0}`: old_code and new_code must both be non-empty")]
    Empty(String),
    #[error("task `{0}`: old_code equals new_code")]
    NoChange(String),
    #[error(transparent)]
    Load(#[from] CorpusError),
}

impl EditTask {
    pub fn validate(&self) -> Result<(), EditError> {
        if self.old_code.trim().is_empty() || self.new_code.trim().is_empty() {
            return Err(EditError::Empty(self.task_id.clone()));
        }
        if self.old_code == self.new_code {
            return Err(EditError::NoChange(self.task_id.clone()));
        }
        Ok(())
    }
}

pub fn load_edit_tasks(path: &Path) -> Result<Vec<EditTask>, EditError> {
    let tasks: Vec<EditTask> = read_jsonl_file(path)?;
    for t in &tasks {
        t.validate()?;
    }
    Ok(tasks)
}

struct EditExemplar {
    old: &'static str,
    new: &'static str,
    description: &'static str,
}

const EXEMPLARS: [EditExemplar; 3] = [
    EditExemplar {
        old: "def area(r):\n    return 3.14 * r * r",
        new: "import math\n\n\ndef area(r):\n    return math.pi * r * r",
        description: "Use math.pi instead of a hard-coded approximation.",
    },
    EditExemplar {
        old: "for i in range(len(names)):\n    print(names[i])",
        new: "for name in names:\n    print(name)",
        description: "Iterate over the names directly instead of by index.",
    },
    EditExemplar {
        old: "def fetch(url):\n    resp = requests.get(url)\n    return resp.json()",
        new: "def fetch(url, timeout=10):\n    resp = requests.get(url, timeout=timeout)\n    resp.raise_for_status()\n    return resp.json()",
        description: "Add a timeout parameter and fail on HTTP error statuses.",
    },
];

fn forward_block(old: &str, new: &str) -> String {
    format!("{OLD_MARKER}\n{old}\n{NEW_MARKER}\n{new}\n{DESCRIPTION_MARKER}\n")
}

fn backward_block(old: &str, description: &str) -> String {
    format!("{OLD_MARKER}\n{old}\n{DESCRIPTION_MARKER}\n{description}\n{NEW_MARKER}\n")
}

pub fn make_edit_forward_prompt(old_code: &str, new_code: &str) -> String {
    let shots: String = EXEMPLARS
        .iter()
        .map(|e| format!("{}{}\n\n", forward_block(e.old, e.new), e.description))
        .collect();
    format!("{FORWARD_INSTRUCTION}\n\n{shots}{}", forward_block(old_code, new_code))
}

pub fn make_edit_backward_prompt(old_code: &str, description: &str) -> String {
    let shots: String = EXEMPLARS
        .iter()
        .map(|e| format!("{}{}\n\n", backward_block(e.old, e.description), e.new))
        .collect();
    format!("{BACKWARD_INSTRUCTION}\n\n{shots}{}", backward_block(old_code, description.trim()))
}

/// The new snippet in a completion: text after the last `[new]` marker line
/// when one is present, fences stripped, boundary blank lines dropped.
pub fn extract_new_code(model_output: &str) -> String {
    let after_marker = model_output
        .rmatch_indices(NEW_MARKER)
        .find(|(i, _)| *i == 0 || model_output.as_bytes()[i - 1] == b'\n')
        .map_or(model_output, |(i, m)| &model_output[i + m.len()..]);
    trim_blank_lines(&strip_code_fences(after_marker))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditMatchScore {
    pub value: u8,
}

pub fn score_exact_match(candidate_new: &str, task: &EditTask, normalization: Normalization) -> EditMatchScore {
    EditMatchScore {
        value: u8::from(exact_match(candidate_new, &task.new_code, normalization) > 0.0),
    }
}

impl EditTask {
    fn metadata(&self, direction: Direction, description: Option<&str>) -> RequestMetadata {
        RequestMetadata {
            task_id: self.task_id.clone(),
            direction: Some(direction),
            reference: Some(self.new_code.clone()),
            source_code: Some(self.old_code.clone()),
            description: description.map(str::to_string),
        }
    }
}

impl RoundTripTask for EditTask {
    fn task_id(&self) -> &str {
        &self.task_id
    }

    fn group(&self) -> &str {
        &self.language_tag
    }

    fn forward_prompt(&self) -> Prompt {
        Prompt {
            text: make_edit_forward_prompt(&self.old_code, &self.new_code),
            metadata: self.metadata(Direction::Forward, None),
        }
    }

    fn backward_prompt(&self, description: &str, direction: Direction) -> Prompt {
        Prompt {
            text: make_edit_backward_prompt(&self.old_code, description),
            metadata: self.metadata(direction, Some(description)),
        }
    }

    fn baseline_description(&self) -> &str {
        BASELINE_EDIT_DESCRIPTION
    }
}

/// Text metric of the extracted new snippet against `new_code`.
#[derive(Debug, Clone, Copy)]
pub struct EditSimilarity {
    pub metric: MetricId,
    pub normalization: Normalization,
}

impl EditSimilarity {
    pub fn new(metric: MetricId, normalization: Normalization) -> Option<Self> {
        (metric != MetricId::Pass).then_some(Self { metric, normalization })
    }
}

impl Similarity<EditTask> for EditSimilarity {
    fn metric(&self) -> MetricId {
        self.metric
    }

    fn score(&self, candidate: &str, task: &EditTask) -> Scored {
        let code = extract_new_code(candidate);
        if code.is_empty() {
            return Scored::flagged(0.0, "empty extraction");
        }
        let v = text_metric(self.metric, &code, &task.new_code, self.normalization)
            .expect("EditSimilarity never holds the pass metric");
        Scored::clean(v.value)
    }
}

fn greedy(prompt: String, metadata: RequestMetadata, max_output_chars: usize) -> GenerationRequest {
    GenerationRequest {
        prompt,
        temperature: 0.0,
        max_output_chars,
        n: 1,
        metadata,
    }
}

/// New snippet generated greedily from the old code and the reference
/// comment, scored by exact match. `Ok(None)` when the task has no comment.
pub fn supervised_edit_generation(
    task: &EditTask,
    model: &dyn Generator,
    normalization: Normalization,
    max_output_chars: usize,
) -> Result<Option<EditMatchScore>, GatewayError> {
    let Some(comment) = task.reference_comment.as_deref() else {
        return Ok(None);
    };
    let req = greedy(
        make_edit_backward_prompt(&task.old_code, comment),
        task.metadata(Direction::Backward, Some(comment)),
        max_output_chars,
    );
    let out = model.generate(&req)?;
    let code = extract_new_code(out.first().map_or("", String::as_str));
    Ok(Some(score_exact_match(&code, task, normalization)))
}

/// Greedy description of the edit and its sentence BLEU against the
/// reference comment. `Ok(None)` when the task has no comment.
pub fn supervised_description_bleu(
    task: &EditTask,
    model: &dyn Generator,
    max_forward_chars: usize,
) -> Result<Option<(String, f64)>, GatewayError> {
    let Some(comment) = task.reference_comment.as_deref() else {
        return Ok(None);
    };
    let prompt = task.forward_prompt();
    let out = model.generate(&greedy(prompt.text, prompt.metadata, max_forward_chars))?;
    let description = truncate_at_boundary(out.first().map_or("", |s| s.trim()), max_forward_chars);
    let score = bleu(&description, comment);
    Ok(Some((description, score)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn task() -> EditTask {
        EditTask {
            task_id: "e1".into(),
            old_code: "x = 1\nprint(x)".into(),
            new_code: "x = 2\nprint(x)".into(),
            language_tag: "python".into(),
            reference_comment: Some("Bump x.".into()),
        }
    }

    #[test]
    fn baseline_literal() {
        assert_eq!(baseline_edit_description(), "Edit.");
        assert_eq!(task().baseline_description(), "Edit.");
    }

    #[test]
    fn prompts_have_markers_in_order() {
        let f = make_edit_forward_prompt("OLD", "NEW");
        assert!(f.ends_with("[old]\nOLD\n[new]\nNEW\n[edit description]\n"));
        let b = make_edit_backward_prompt("OLD", "do it");
        assert!(b.ends_with("[old]\nOLD\n[edit description]\ndo it\n[new]\n"));
        let swapped = make_edit_forward_prompt("NEW", "OLD");
        assert!(swapped.ends_with("[old]\nNEW\n[new]\nOLD\n[edit description]\n"));
    }

    #[test]
    fn extraction() {
        assert_eq!(extract_new_code("```python\nx = 2\n```"), "x = 2");
        assert_eq!(extract_new_code("[new]\nx = 2\n"), "x = 2");
        assert_eq!(extract_new_code("x = 2\n"), "x = 2");
        assert_eq!(extract_new_code("see a[new] b\n[new]\ny"), "y");
    }

    #[test]
    fn exact_match_scoring() {
        let t = task();
        assert_eq!(score_exact_match(&t.new_code, &t, Normalization::Standard).value, 1);
        assert_eq!(score_exact_match(&t.old_code, &t, Normalization::Standard).value, 0);
        assert_eq!(score_exact_match("x = 2  \r\nprint(x)\n\n", &t, Normalization::Standard).value, 1);
        assert_eq!(score_exact_match("x = 2  \r\nprint(x)\n\n", &t, Normalization::Strict).value, 0);
    }

    #[test]
    fn validation() {
        let mut t = task();
        assert!(t.validate().is_ok());
        t.new_code = t.old_code.clone();
        assert!(matches!(t.validate(), Err(EditError::NoChange(_))));
        t.new_code = " ".into();
        assert!(matches!(t.validate(), Err(EditError::Empty(_))));
    }

    #[test]
    fn similarity_rejects_pass_metric() {
        assert!(EditSimilarity::new(MetricId::Pass, Normalization::Standard).is_none());
        let sim = EditSimilarity::new(MetricId::ExactMatch, Normalization::Standard).unwrap();
        assert_eq!(sim.score("x = 2\nprint(x)", &task()).value, 100.0);
        assert_eq!(sim.score("", &task()).flag.as_deref(), Some("empty extraction"));
    }
}
