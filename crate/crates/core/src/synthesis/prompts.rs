//! Prompt templates, TODO splicing, and candidate extraction for SynthesisRtc.

use crate::text::{flatten_to_line, leading_indent, reindent, strip_code_fences, trim_blank_lines};

pub const COMMENT_MARKER: &str = "#";
pub const TODO_PREFIX: &str = "TODO:";
/// Uninformative description used for the baseline run.
pub const BASELINE_DESCRIPTION: &str = "Implement.";

pub const REGION_BEGIN: &str = "# >>> BEGIN REGION";
pub const REGION_END: &str = "# <<< END REGION";

const FORWARD_INSTRUCTION: &str = "Each example shows Python code in which one region is enclosed between \
`# >>> BEGIN REGION` and `# <<< END REGION` marker lines. Write one short sentence that says what the \
marked region does, so that a programmer could write it again from the sentence and the code around it.";

const BACKWARD_INSTRUCTION: &str = "Each example shows Python code containing a `# TODO:` comment. Write the \
code that should replace the TODO comment. Answer with that code only, indented as it would appear in the file.";

/// A worked example shared by the forward and backward prompts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exemplar {
    pub context_before: &'static str,
    pub region: &'static str,
    pub context_after: &'static str,
    pub description: &'static str,
}

/// The three fixed examples used in every synthesis prompt.
pub const EXEMPLARS: [Exemplar; 3] = [
    Exemplar {
        context_before: "def mean(values):\n    if not values:\n        raise ValueError(\"empty input\")\n",
        region: "    total = 0\n    for v in values:\n        total += v",
        context_after: "\n    return total / len(values)",
        description: "Add up all the values into total.",
    },
    Exemplar {
        context_before: "class Inventory:\n    def __init__(self):\n        self.items = {}\n\n    def remove(self, name, count):\n",
        region: "        have = self.items.get(name, 0)\n        if have < count:\n            raise KeyError(name)\n        self.items[name] = have - count",
        context_after: "\n        return self.items[name]",
        description: "Take count units of name out of stock, raising KeyError when there are not enough.",
    },
    Exemplar {
        context_before: "import json\n\n\ndef load_config(path):\n",
        region: "    with open(path, encoding=\"utf-8\") as fh:\n        data = json.load(fh)",
        context_after: "\n    data.setdefault(\"debug\", False)\n    return data",
        description: "Read the JSON file at path into data.",
    },
];

/// Code with the region between sentinel lines.
pub fn marked_code(context_before: &str, region: &str, context_after: &str) -> String {
    let indent = leading_indent(region);
    format!("{context_before}{indent}{REGION_BEGIN}\n{region}\n{indent}{REGION_END}{context_after}")
}

/// `<indent># TODO: <description flattened to one line>`
pub fn todo_comment(indent: &str, description: &str) -> String {
    format!("{indent}{COMMENT_MARKER} {TODO_PREFIX} {}", flatten_to_line(description))
}

/// Backward input: the context with the region replaced by a TODO line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackwardInput {
    pub context_before: String,
    pub todo_comment: String,
    pub context_after: String,
}

impl BackwardInput {
    pub fn code(&self) -> String {
        format!("{}{}{}", self.context_before, self.todo_comment, self.context_after)
    }

    /// Puts `region` back where the TODO line is.
    pub fn restore(&self, region: &str) -> String {
        format!("{}{region}{}", self.context_before, self.context_after)
    }
}

pub fn splice_todo(context_before: &str, region: &str, context_after: &str, description: &str) -> BackwardInput {
    BackwardInput {
        context_before: context_before.to_string(),
        todo_comment: todo_comment(leading_indent(region), description),
        context_after: context_after.to_string(),
    }
}

pub fn baseline_input(context_before: &str, region: &str, context_after: &str) -> BackwardInput {
    splice_todo(context_before, region, context_after, BASELINE_DESCRIPTION)
}

fn forward_block(context_before: &str, region: &str, context_after: &str) -> String {
    format!("[code]\n{}\n[description]\n", marked_code(context_before, region, context_after))
}

fn backward_block(input: &BackwardInput) -> String {
    format!("[code]\n{}\n[implementation]\n", input.code())
}

pub fn few_shot_forward() -> String {
    EXEMPLARS
        .iter()
        .map(|e| format!("{}{}\n\n", forward_block(e.context_before, e.region, e.context_after), e.description))
        .collect()
}

pub fn few_shot_backward() -> String {
    EXEMPLARS
        .iter()
        .map(|e| {
            let input = splice_todo(e.context_before, e.region, e.context_after, e.description);
            format!("{}{}\n\n", backward_block(&input), e.region)
        })
        .collect()
}

pub fn make_forward_prompt(context_before: &str, region: &str, context_after: &str) -> String {
    format!(
        "{FORWARD_INSTRUCTION}\n\n{}{}",
        few_shot_forward(),
        forward_block(context_before, region, context_after)
    )
}

pub fn make_backward_prompt(input: &BackwardInput) -> String {
    format!("{BACKWARD_INSTRUCTION}\n\n{}{}", few_shot_backward(), backward_block(input))
}

/// Turns a raw completion into text that can replace the region: fences
/// stripped, blank boundary lines dropped, and the block shifted so its
/// minimum indentation equals the region's first-line indentation. A block
/// whose first line already carries that indentation is left as is, which
/// keeps under-indented continuation lines (multi-line strings) intact.
pub fn extract_region_candidate(model_output: &str, region_indent: &str) -> String {
    let body = trim_blank_lines(&strip_code_fences(model_output));
    if body.is_empty() {
        return body;
    }
    let first = body.lines().next().unwrap_or("");
    if leading_indent(first) == region_indent {
        return body;
    }
    reindent(&body, region_indent)
}
