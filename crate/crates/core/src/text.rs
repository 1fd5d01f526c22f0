//! Line and indentation helpers shared by the task modules.
//!
//! All lengths here are counted in Unicode scalar values, never bytes.

/// Window, in characters, inside which truncation looks for a whitespace cut.
pub const TRUNCATION_WINDOW: usize = 16;

pub fn char_len(s: &str) -> usize {
    s.chars().count()
}

/// Caps `text` at `max_chars` characters.
///
/// When the text is too long the cut lands on the last whitespace inside the
/// final [`TRUNCATION_WINDOW`] characters of the kept prefix, if there is one;
/// otherwise the prefix is cut hard. Trailing whitespace is dropped from a
/// truncated result. Text that already fits is returned unchanged.
pub fn truncate_at_boundary(text: &str, max_chars: usize) -> String {
    let chars: Vec<char> = text.chars().collect();
    if chars.len() <= max_chars {
        return text.to_string();
    }
    // Cutting right before a whitespace character is already a clean boundary.
    if chars[max_chars].is_whitespace() {
        return chars[..max_chars].iter().collect::<String>().trim_end().to_string();
    }
    let window_start = max_chars.saturating_sub(TRUNCATION_WINDOW);
    let cut = (window_start..max_chars)
        .rev()
        .find(|&i| chars[i].is_whitespace())
        .unwrap_or(max_chars);
    let kept: String = chars[..cut].iter().collect();
    let trimmed = kept.trim_end();
    if trimmed.is_empty() {
        chars[..max_chars].iter().collect()
    } else {
        trimmed.to_string()
    }
}

/// Joins a possibly multi-line string into one line; each line break becomes
/// a single space.
pub fn flatten_to_line(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\r' => {
                if chars.peek() == Some(&'\n') {
                    chars.next();
                }
                out.push(' ');
            }
            '\n' => out.push(' '),
            _ => out.push(c),
        }
    }
    out.trim().to_string()
}

/// Leading spaces and tabs of `line`.
pub fn leading_indent(line: &str) -> &str {
    let end = line
        .char_indices()
        .find(|&(_, c)| c != ' ' && c != '\t')
        .map(|(i, _)| i)
        .unwrap_or(line.len());
    &line[..end]
}

/// Byte offset of the start of the line containing `offset`.
pub fn line_start(text: &str, offset: usize) -> usize {
    text[..offset].rfind('\n').map(|i| i + 1).unwrap_or(0)
}

/// Byte offset of the `\n` ending the line containing `offset` (or the text length).
pub fn line_end(text: &str, offset: usize) -> usize {
    text[offset..].find('\n').map(|i| offset + i).unwrap_or(text.len())
}

/// 1-based line number of a byte offset.
pub fn line_number(text: &str, offset: usize) -> usize {
    text.as_bytes()[..offset].iter().filter(|&&b| b == b'\n').count() + 1
}

pub fn is_blank(line: &str) -> bool {
    line.trim().is_empty()
}

/// Drops blank lines at both ends. Interior lines are kept verbatim.
pub fn trim_blank_lines(text: &str) -> String {
    let lines: Vec<&str> = text.lines().collect();
    let first = lines.iter().position(|l| !is_blank(l));
    let Some(first) = first else {
        return String::new();
    };
    let last = lines.iter().rposition(|l| !is_blank(l)).unwrap_or(first);
    lines[first..=last].join("\n")
}

/// Removes a Markdown code fence around the text, if present.
///
/// Only the first fenced block is kept; text before and after it is discarded.
/// Unfenced text is returned as is.
pub fn strip_code_fences(text: &str) -> String {
    let lines: Vec<&str> = text.lines().collect();
    let Some(open) = lines.iter().position(|l| l.trim_start().starts_with("```")) else {
        return text.to_string();
    };
    let close = lines[open + 1..]
        .iter()
        .position(|l| l.trim_start().starts_with("```"))
        .map(|i| open + 1 + i)
        .unwrap_or(lines.len());
    lines[open + 1..close].join("\n")
}

/// Shifts every non-blank line so the block's minimum indentation equals
/// `indent`. Blank lines become empty.
pub fn reindent(block: &str, indent: &str) -> String {
    let min_indent = block
        .lines()
        .filter(|l| !is_blank(l))
        .map(|l| leading_indent(l).len())
        .min()
        .unwrap_or(0);
    block
        .lines()
        .map(|l| {
            if is_blank(l) {
                String::new()
            } else {
                format!("{indent}{}", &l[min_indent..])
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_text_is_untouched() {
        assert_eq!(truncate_at_boundary("sum the list", 128), "sum the list");
        assert_eq!(truncate_at_boundary("", 1), "");
    }

    #[test]
    fn truncation_prefers_whitespace_in_window() {
        let text = "alpha beta gamma delta";
        // 13 chars keeps "alpha beta ga"; last space in the window is at 10.
        assert_eq!(truncate_at_boundary(text, 13), "alpha beta");
        // Next char after the cap is a space: keep the full prefix.
        assert_eq!(truncate_at_boundary(text, 10), "alpha beta");
    }

    #[test]
    fn truncation_hard_cuts_without_nearby_whitespace() {
        let text = format!("x {}", "y".repeat(40));
        let out = truncate_at_boundary(&text, 30);
        assert_eq!(char_len(&out), 30);
        assert!(out.ends_with('y'));
    }

    #[test]
    fn truncation_counts_scalars() {
        let text = "ééééé ééééé";
        assert_eq!(truncate_at_boundary(text, 8), "ééééé");
    }

    #[test]
    fn flatten_replaces_each_break_with_a_space() {
        assert_eq!(flatten_to_line("sum\nthe list"), "sum the list");
        assert_eq!(flatten_to_line("a\r\nb"), "a b");
        assert_eq!(flatten_to_line("one line"), "one line");
    }

    #[test]
    fn fences_are_stripped() {
        assert_eq!(strip_code_fences("```python\nx = 1\ny = 2\n```"), "x = 1\ny = 2");
        assert_eq!(strip_code_fences("Here:\n```\nx\n```\nthanks"), "x");
        assert_eq!(strip_code_fences("x = 1"), "x = 1");
    }

    #[test]
    fn reindent_shifts_to_target() {
        let block = "  if x:\n    y()\n\n  z()";
        assert_eq!(reindent(block, "    "), "    if x:\n      y()\n\n    z()");
    }

    #[test]
    fn line_helpers() {
        let text = "ab\ncd\nef";
        assert_eq!(line_start(text, 4), 3);
        assert_eq!(line_end(text, 4), 5);
        assert_eq!(line_number(text, 4), 2);
        assert_eq!(line_end(text, 7), 8);
        assert_eq!(trim_blank_lines("\n\n  x\n y\n \n"), "  x\n y");
    }
}
