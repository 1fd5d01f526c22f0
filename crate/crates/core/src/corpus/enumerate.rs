//! Candidate ranges: runs of consecutive sibling statements, and their
//! sampling weights.

use std::path::{Path, PathBuf};

use num_rational::Ratio;

use super::cst::{statement_lists, ParseError};
use crate::text::char_len;

pub const MIN_CHARS: usize = 32;
pub const MAX_CHARS: usize = 384;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateRange {
    /// Path relative to the project root.
    pub file: PathBuf,
    /// Half-open byte offsets into the file.
    pub byte_span: (usize, usize),
    pub char_len: usize,
    pub statement_count: usize,
    /// `char_len / containment_count`; set by [`assign_weights`].
    pub weight: Ratio<u64>,
    /// The run is every statement of an indented block, so deleting it
    /// needs a placeholder statement.
    pub fills_block: bool,
    /// Indentation of the run's first line.
    pub indent: String,
}

impl CandidateRange {
    pub fn contains(&self, other: &CandidateRange) -> bool {
        self.file == other.file && self.byte_span.0 <= other.byte_span.0 && other.byte_span.1 <= self.byte_span.1
    }

    pub fn weight_f64(&self) -> f64 {
        *self.weight.numer() as f64 / *self.weight.denom() as f64
    }
}

/// All in-range statement runs of one parsed file, ordered by `(start, end)`
/// with duplicate spans removed. Weights are left at zero.
pub fn enumerate_candidates(
    file: &Path,
    text: &str,
    tree: &tree_sitter::Tree,
    min_chars: usize,
    max_chars: usize,
) -> Vec<CandidateRange> {
    let mut out: Vec<CandidateRange> = Vec::new();
    for list in statement_lists(tree, text) {
        let n = list.statements.len();
        for i in 0..n {
            let Some(start) = list.statements[i].region_start else {
                continue;
            };
            for j in i..n {
                let Some(end) = list.statements[j].region_end else {
                    continue;
                };
                let len = char_len(&text[start..end]);
                if len > max_chars {
                    break;
                }
                if len < min_chars {
                    continue;
                }
                let indent = text[start..list.statements[i].start_byte].to_string();
                out.push(CandidateRange {
                    file: file.to_path_buf(),
                    byte_span: (start, end),
                    char_len: len,
                    statement_count: j - i + 1,
                    weight: Ratio::from_integer(0),
                    fills_block: list.is_block && i == 0 && j == n - 1,
                    indent,
                });
            }
        }
    }
    out.sort_by(|a, b| a.byte_span.cmp(&b.byte_span));
    out.dedup_by(|later, earlier| {
        if later.byte_span == earlier.byte_span {
            // Same text reached through nesting (a block whose only statement
            // is compound); keep the placeholder requirement if either needs it.
            earlier.fills_block |= later.fills_block;
            true
        } else {
            false
        }
    });
    out
}

/// Parses and enumerates one file; parse failures come back as `Err` so the
/// caller can skip the file.
pub fn enumerate_file(
    file: &Path,
    text: &str,
    min_chars: usize,
    max_chars: usize,
) -> Result<Vec<CandidateRange>, ParseError> {
    let tree = super::cst::parse_python(text)?;
    Ok(enumerate_candidates(file, text, &tree, min_chars, max_chars))
}

/// Number of candidates (itself included) whose span is a superset of `c`'s.
pub fn containment_count(c: &CandidateRange, all: &[CandidateRange]) -> usize {
    all.iter().filter(|o| o.contains(c)).count()
}

pub fn sampling_weight(c: &CandidateRange, all: &[CandidateRange]) -> Ratio<u64> {
    let count = containment_count(c, all).max(1);
    Ratio::new(c.char_len as u64, count as u64)
}

/// Sets every candidate's weight relative to the same-file candidates in `all`.
pub fn assign_weights(all: &mut [CandidateRange]) {
    let weights: Vec<Ratio<u64>> = all.iter().map(|c| sampling_weight(c, all)).collect();
    for (c, w) in all.iter_mut().zip(weights) {
        c.weight = w;
    }
}
