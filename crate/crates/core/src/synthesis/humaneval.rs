//! Adapter from HumanEval-format problems to synthesis units.
//!
//! The entry point's docstring (and the examples inside it) is removed, the
//! canonical body becomes the region, and the problem's own `check` function
//! is the pass oracle.

use std::time::Duration;

use log::warn;
use serde::{Deserialize, Serialize};
use tree_sitter::Node;

use crate::corpus::cst::parse_python;
use crate::sandbox::{SandboxError, SandboxRunner};
use crate::text::{line_end, line_start};

/// One record of the line-delimited problem archive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HumanEvalProblem {
    pub task_id: String,
    pub prompt: String,
    pub canonical_solution: String,
    pub test: String,
    pub entry_point: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HumanEvalUnit {
    pub task_id: String,
    /// Problem prompt without the entry point's docstring.
    pub context_before: String,
    /// Canonical body, boundary blank lines removed.
    pub region_text: String,
    pub context_after: String,
    pub test: String,
    pub entry_point: String,
}

impl HumanEvalUnit {
    /// Full program checking `body` against the problem's tests.
    pub fn program(&self, body: &str) -> String {
        format!(
            "{}{body}{}\n\n{}\n\ncheck({})\n",
            self.context_before, self.context_after, self.test, self.entry_point
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AdapterError {
    Parse(String),
    NoEntryPoint(String),
    EmptyBody,
}

impl std::fmt::Display for AdapterError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AdapterError::Parse(e) => write!(f, "problem does not parse: {e}"),
            AdapterError::NoEntryPoint(name) => write!(f, "no top-level function `{name}`"),
            AdapterError::EmptyBody => f.write_str("canonical solution is empty"),
        }
    }
}

fn find_function<'t>(root: Node<'t>, name: &str, text: &str) -> Option<Node<'t>> {
    let mut cursor = root.walk();
    let children: Vec<Node<'t>> = root.named_children(&mut cursor).collect();
    children.into_iter().find_map(|child| {
        let def = match child.kind() {
            "function_definition" => child,
            "decorated_definition" => child.child_by_field_name("definition")?,
            _ => return None,
        };
        let ident = def.child_by_field_name("name")?;
        (&text[ident.byte_range()] == name).then_some(def)
    })
}

/// Byte range of whole lines holding the function's leading docstring, if any.
fn docstring_lines(def: Node<'_>, text: &str) -> Option<(usize, usize)> {
    let body = def.child_by_field_name("body")?;
    let mut cursor = body.walk();
    let first = body.named_children(&mut cursor).find(|c| !c.is_extra())?;
    if first.kind() != "expression_statement" || first.named_child_count() != 1 {
        return None;
    }
    let expr = first.named_child(0)?;
    if !matches!(expr.kind(), "string" | "concatenated_string") {
        return None;
    }
    let start = line_start(text, first.start_byte());
    let end = line_end(text, first.end_byte());
    Some((start, (end + 1).min(text.len())))
}

/// Prompt with the entry point's docstring lines removed.
pub fn strip_docstring(prompt_and_body: &str, entry_point: &str) -> Result<String, AdapterError> {
    let tree = parse_python(prompt_and_body).map_err(|e| AdapterError::Parse(e.to_string()))?;
    let def = find_function(tree.root_node(), entry_point, prompt_and_body)
        .ok_or_else(|| AdapterError::NoEntryPoint(entry_point.to_string()))?;
    Ok(match docstring_lines(def, prompt_and_body) {
        Some((s, e)) => format!("{}{}", &prompt_and_body[..s], &prompt_and_body[e..]),
        None => prompt_and_body.to_string(),
    })
}

pub fn adapt(problem: &HumanEvalProblem) -> Result<HumanEvalUnit, AdapterError> {
    let full = format!("{}{}", problem.prompt, problem.canonical_solution);
    let tree = parse_python(&full).map_err(|e| AdapterError::Parse(e.to_string()))?;
    let def = find_function(tree.root_node(), &problem.entry_point, &full)
        .ok_or_else(|| AdapterError::NoEntryPoint(problem.entry_point.clone()))?;
    // Docstring removal happens on the prompt alone so the body offsets stay put.
    let prompt = match docstring_lines(def, &full) {
        Some((s, e)) if e <= problem.prompt.len() => format!("{}{}", &problem.prompt[..s], &problem.prompt[e..]),
        _ => problem.prompt.clone(),
    };
    let body = &problem.canonical_solution;
    let lead = body.len() - body.trim_start_matches(['\n', '\r']).len();
    let region = body[lead..].trim_end();
    if region.trim().is_empty() {
        return Err(AdapterError::EmptyBody);
    }
    let mut context_before = prompt;
    if !context_before.ends_with('\n') {
        context_before.push('\n');
    }
    Ok(HumanEvalUnit {
        task_id: problem.task_id.clone(),
        context_before,
        region_text: region.to_string(),
        context_after: String::new(),
        test: problem.test.clone(),
        entry_point: problem.entry_point.clone(),
    })
}

/// Runs the problem's tests against `body`: 1 iff the program exits 0 in time.
pub fn run_check(
    unit: &HumanEvalUnit,
    body: &str,
    runner: &SandboxRunner,
    timeout: Duration,
) -> Result<(bool, bool), SandboxError> {
    let mut wt = runner.scratch_worktree("humaneval")?;
    wt.write_file(std::path::Path::new("program.py"), unit.program(body).as_bytes())?;
    let out = runner.run_raw(&wt, "python3 program.py", timeout)?;
    Ok((out.exit_status == 0 && !out.timed_out, out.timed_out))
}

/// Adapts every problem, dropping (with a warning) those that do not adapt or
/// whose canonical solution fails its own tests.
pub fn load_units(
    problems: &[HumanEvalProblem],
    runner: &SandboxRunner,
    timeout: Duration,
) -> (Vec<HumanEvalUnit>, Vec<(String, String)>) {
    let mut units = Vec::new();
    let mut excluded = Vec::new();
    for p in problems {
        let unit = match adapt(p) {
            Ok(u) => u,
            Err(e) => {
                warn!("{}: excluded: {e}", p.task_id);
                excluded.push((p.task_id.clone(), e.to_string()));
                continue;
            }
        };
        match run_check(&unit, &unit.region_text, runner, timeout) {
            Ok((true, _)) => units.push(unit),
            Ok((false, timed_out)) => {
                let why = if timed_out {
                    "canonical solution timed out"
                } else {
                    "canonical solution fails its tests"
                };
                warn!("{}: excluded: {why}", p.task_id);
                excluded.push((p.task_id.clone(), why.to_string()));
            }
            Err(e) => {
                warn!("{}: excluded: {e}", p.task_id);
                excluded.push((p.task_id.clone(), e.to_string()));
            }
        }
    }
    (units, excluded)
}
