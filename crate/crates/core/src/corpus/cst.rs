//! Statement-level view of a Python concrete syntax tree.

use tree_sitter::{Node, Parser, Tree};

use crate::text::{line_end, line_start};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseError {
    /// The grammar could not be loaded.
    Language(String),
    /// The parser gave up (timeout or cancellation).
    NoTree,
    /// The tree contains error or missing nodes; first offending byte offset.
    Syntax { byte: usize },
}

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParseError::Language(e) => write!(f, "cannot load the Python grammar: {e}"),
            ParseError::NoTree => f.write_str("parser produced no tree"),
            ParseError::Syntax { byte } => write!(f, "syntax error near byte {byte}"),
        }
    }
}

pub fn parse_python(text: &str) -> Result<Tree, ParseError> {
    let mut parser = Parser::new();
    parser
        .set_language(&tree_sitter_python::LANGUAGE.into())
        .map_err(|e| ParseError::Language(e.to_string()))?;
    let tree = parser.parse(text, None).ok_or(ParseError::NoTree)?;
    let root = tree.root_node();
    if root.has_error() {
        return Err(ParseError::Syntax {
            byte: first_error(root).unwrap_or(0),
        });
    }
    Ok(tree)
}

fn first_error(node: Node<'_>) -> Option<usize> {
    if node.is_error() || node.is_missing() {
        return Some(node.start_byte());
    }
    let mut cursor = node.walk();
    let children: Vec<Node<'_>> = node.children(&mut cursor).collect();
    children.into_iter().filter(|c| c.has_error()).find_map(first_error)
}

/// One statement with the line-aligned span it would occupy in a region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Statement {
    pub start_byte: usize,
    pub end_byte: usize,
    /// Start of the statement's first line, if only indentation precedes it.
    pub region_start: Option<usize>,
    /// End of the statement's last line (before `\n`, trailing whitespace
    /// trimmed), if nothing but whitespace or a comment follows it.
    pub region_end: Option<usize>,
}

/// Consecutive sibling statements sharing one parent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatementList {
    /// `true` for an indented suite, `false` for the module body.
    pub is_block: bool,
    pub statements: Vec<Statement>,
}

fn region_bounds(text: &str, start: usize, end: usize) -> (Option<usize>, Option<usize>) {
    let ls = line_start(text, start);
    let region_start = text[ls..start].chars().all(|c| c == ' ' || c == '\t').then_some(ls);
    let le = line_end(text, end);
    let rest = text[end..le].trim_start();
    let region_end = (rest.is_empty() || rest.starts_with('#')).then(|| text[..le].trim_end().len());
    (region_start, region_end)
}

/// Every `module` / `block` statement list, in document order.
pub fn statement_lists(tree: &Tree, text: &str) -> Vec<StatementList> {
    let mut stack = vec![tree.root_node()];
    let mut lists: Vec<(usize, StatementList)> = Vec::new();
    while let Some(node) = stack.pop() {
        let mut cursor = node.walk();
        let children: Vec<Node<'_>> = node.named_children(&mut cursor).collect();
        if matches!(node.kind(), "module" | "block") {
            let statements: Vec<Statement> = children
                .iter()
                .filter(|c| !c.is_extra())
                .map(|c| {
                    let (region_start, region_end) = region_bounds(text, c.start_byte(), c.end_byte());
                    Statement {
                        start_byte: c.start_byte(),
                        end_byte: c.end_byte(),
                        region_start,
                        region_end,
                    }
                })
                .collect();
            if !statements.is_empty() {
                lists.push((
                    node.start_byte(),
                    StatementList {
                        is_block: node.kind() == "block",
                        statements,
                    },
                ));
            }
        }
        stack.extend(children.into_iter().rev());
    }
    lists.sort_by_key(|(start, l)| (*start, l.statements[0].start_byte));
    lists.into_iter().map(|(_, l)| l).collect()
}
