use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Trailing whitespace per line, line endings, and boundary blank lines
    /// are normalized away before comparison.
    #[default]
    Standard,
    /// Raw byte equality.
    Strict,
}

/// `\r\n`/`\r` become `\n`, trailing whitespace is stripped from each line,
/// and blank lines at either end are dropped. Idempotent.
pub fn normalize_code(text: &str) -> String {
    let unified = text.replace("\r\n", "\n").replace('\r', "\n");
    let lines: Vec<&str> = unified.split('\n').map(str::trim_end).collect();
    let Some(first) = lines.iter().position(|l| !l.is_empty()) else {
        return String::new();
    };
    let last = lines.iter().rposition(|l| !l.is_empty()).unwrap_or(first);
    lines[first..=last].join("\n")
}

/// 100 when the texts match under `normalization`, else 0.
pub fn exact_match(candidate: &str, reference: &str, normalization: Normalization) -> f64 {
    let equal = match normalization {
        Normalization::Strict => candidate == reference,
        Normalization::Standard => normalize_code(candidate) == normalize_code(reference),
    };
    if equal {
        100.0
    } else {
        0.0
    }
}
