//! Whole-line context windows around a region.

use crate::text::char_len;

pub const CONTEXT_BUDGET: usize = 1024;

/// Lines before `start`, nearest first, each with its trailing `\n`.
/// Empty unless `start` sits at a line start.
fn lines_before(text: &str, start: usize) -> Vec<&str> {
    if start > 0 && text.as_bytes()[start - 1] != b'\n' {
        return Vec::new();
    }
    let mut v: Vec<&str> = text[..start].split_inclusive('\n').collect();
    v.reverse();
    v
}

/// Lines after `end`, nearest first, each as `\n` + line content. A final
/// `\n` that only terminates the last line is left out. Empty unless `end`
/// sits at a line end.
fn lines_after(text: &str, end: usize) -> Vec<&str> {
    let rest = &text[end..];
    if !rest.is_empty() && !rest.starts_with('\n') {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < rest.len() {
        let next = rest[pos + 1..].find('\n').map_or(rest.len(), |i| pos + 1 + i);
        if next == rest.len() && pos + 1 == rest.len() {
            break;
        }
        out.push(&rest[pos..next]);
        pos = next;
    }
    out
}

/// Greedy window: take whole lines alternately before and after the span
/// (before first), switching to the other side when one runs out, and stop
/// at the first line that would push the total past `budget` characters.
pub fn build_context(text: &str, byte_span: (usize, usize), budget: usize) -> (String, String) {
    let before = lines_before(text, byte_span.0);
    let after = lines_after(text, byte_span.1);
    let (mut nb, mut na, mut used) = (0usize, 0usize, 0usize);
    let mut before_turn = true;
    loop {
        let take_before = if nb < before.len() && na < after.len() {
            before_turn
        } else if nb < before.len() {
            true
        } else if na < after.len() {
            false
        } else {
            break;
        };
        let line = if take_before { before[nb] } else { after[na] };
        let cost = char_len(line);
        if used + cost > budget {
            break;
        }
        used += cost;
        if take_before {
            nb += 1;
        } else {
            na += 1;
        }
        before_turn = !take_before;
    }
    let context_before: String = before[..nb].iter().rev().copied().collect();
    let context_after: String = after[..na].concat();
    (context_before, context_after)
}
