//! Similarity functions `sim(candidate, reference)`.
//!
//! Text metrics (BLEU, ROUGE-L, exact match) report on a 0-100 scale; the
//! unit-test pass oracle reports 0 or 1. Every function here is pure and sums
//! in a fixed order, so identical inputs give bitwise-identical outputs.

mod bleu;
mod exact;
mod rouge;
mod tokenize;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use bleu::{bleu, corpus_bleu};
pub use exact::{exact_match, normalize_code, Normalization};
pub use rouge::{lcs_len, rouge_l};
pub use tokenize::tokenize;

use crate::sandbox::SandboxRunner;
use crate::synthesis::{evaluate_pass, PassScore, SynthesisUnit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricId {
    ExactMatch,
    Bleu,
    RougeL,
    Pass,
}

impl MetricId {
    pub fn range_max(self) -> f64 {
        match self {
            MetricId::Pass => 1.0,
            MetricId::ExactMatch | MetricId::Bleu | MetricId::RougeL => 100.0,
        }
    }

    pub fn range_min(self) -> f64 {
        0.0
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MetricId::ExactMatch => "exact_match",
            MetricId::Bleu => "bleu",
            MetricId::RougeL => "rouge_l",
            MetricId::Pass => "pass",
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "em" | "exact_match" | "exact" => Ok(MetricId::ExactMatch),
            "bleu" => Ok(MetricId::Bleu),
            "rouge" | "rouge_l" | "rouge-l" => Ok(MetricId::RougeL),
            "pass" => Ok(MetricId::Pass),
            other => Err(format!("unknown metric `{other}`")),
        }
    }
}

/// One similarity value tagged with its metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub metric_id: MetricId,
    pub value: f64,
    pub range_max: f64,
}

impl MetricValue {
    pub fn new(metric_id: MetricId, value: f64) -> Self {
        Self {
            metric_id,
            value,
            range_max: metric_id.range_max(),
        }
    }

    pub fn in_range(&self) -> bool {
        (0.0..=self.range_max).contains(&self.value)
    }
}

/// Text metric selected by id, applied to a candidate/reference pair.
pub fn text_metric(
    metric: MetricId,
    candidate: &str,
    reference: &str,
    normalization: Normalization,
) -> Option<MetricValue> {
    let value = match metric {
        MetricId::ExactMatch => exact_match(candidate, reference, normalization),
        MetricId::Bleu => bleu(candidate, reference),
        MetricId::RougeL => rouge_l(candidate, reference),
        MetricId::Pass => return None,
    };
    Some(MetricValue::new(metric, value))
}

/// Pass oracle presented with the uniform similarity signature.
pub fn pass_metric(candidate: &str, unit: &SynthesisUnit, runner: &SandboxRunner) -> PassScore {
    evaluate_pass(candidate, unit, runner)
}
