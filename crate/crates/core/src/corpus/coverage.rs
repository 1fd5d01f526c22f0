//! Line coverage relation and the coverage filter.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use crate::sandbox::TestReport;
use crate::text::line_number;

/// `(file, 1-based line) -> ids of tests that executed the line`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoverageMap {
    lines: BTreeMap<(PathBuf, usize), BTreeSet<String>>,
}

impl CoverageMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds the map from a coverage run. Tests absent from the report's
    /// test list are dropped, as are zero line numbers.
    pub fn from_report(report: &TestReport) -> Self {
        let known: BTreeSet<&str> = report.tests.iter().map(|t| t.test_id.as_str()).collect();
        let mut map = Self::new();
        for (test_id, lines) in report.coverage.iter().flatten() {
            if !known.contains(test_id.as_str()) {
                continue;
            }
            for (file, line) in lines {
                map.insert(Path::new(file), *line, test_id);
            }
        }
        map
    }

    pub fn insert(&mut self, file: &Path, line: usize, test_id: &str) {
        if line == 0 {
            return;
        }
        self.lines
            .entry((file.to_path_buf(), line))
            .or_default()
            .insert(test_id.to_string());
    }

    pub fn tests_covering(&self, file: &Path, line: usize) -> Option<&BTreeSet<String>> {
        self.lines.get(&(file.to_path_buf(), line))
    }

    pub fn is_covered(&self, file: &Path, line: usize) -> bool {
        self.tests_covering(file, line).is_some_and(|s| !s.is_empty())
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }
}

/// 1-based inclusive line range occupied by `byte_span` in `text`.
pub fn span_lines(text: &str, (start, end): (usize, usize)) -> (usize, usize) {
    let first = line_number(text, start);
    let last = line_number(text, end.saturating_sub(1).max(start));
    (first, last)
}

/// True iff at least one line of the span is covered by at least one test.
pub fn coverage_filter(file: &Path, text: &str, byte_span: (usize, usize), map: &CoverageMap) -> bool {
    let (first, last) = span_lines(text, byte_span);
    (first..=last).any(|line| map.is_covered(file, line))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uncovered_and_covered() {
        let text = "a = 1\nb = 2\nc = 3\n";
        let f = Path::new("m.py");
        let mut map = CoverageMap::new();
        assert!(!coverage_filter(f, text, (0, 11), &map));
        map.insert(f, 2, "t");
        assert!(coverage_filter(f, text, (0, 11), &map));
        assert!(!coverage_filter(f, text, (12, 17), &map));
        assert!(!coverage_filter(Path::new("other.py"), text, (0, 11), &map));
    }

    #[test]
    fn span_line_numbers() {
        let text = "a = 1\nb = 2\nc = 3\n";
        assert_eq!(span_lines(text, (0, 5)), (1, 1));
        assert_eq!(span_lines(text, (6, 17)), (2, 3));
    }
}
