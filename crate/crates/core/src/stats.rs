//! Reporting statistics: correlations against supervised metrics, repeat-run
//! spread, output-length comparisons, and per-project tables.

use std::cmp::Ordering;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{aggregate, GroupedEstimate};

/// Fewest observations a correlation is reported for.
pub const MIN_CORRELATION_N: usize = 3;

/// Histogram bucket width, in characters, for [`length_stats`].
pub const LENGTH_BUCKET_WIDTH: usize = 50;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("inputs differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {min} observations, got {got}")]
    TooFew { min: usize, got: usize },
    #[error("zero variance in input")]
    ZeroVariance,
    #[error("non-finite value in input")]
    NonFinite,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn check_pair(xs: &[f64], ys: &[f64]) -> Result<(), StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < MIN_CORRELATION_N {
        return Err(StatsError::TooFew {
            min: MIN_CORRELATION_N,
            got: xs.len(),
        });
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(())
}

/// Pearson product-moment correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    check_pair(xs, ys)?;
    let (mx, my) = (mean(xs), mean(ys));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the average of the ranks they span.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        // positions i..=j hold ranks i+1..=j+1
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: Pearson over average ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    check_pair(xs, ys)?;
    pearson(&average_ranks(xs), &average_ranks(ys))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub pearson_r: f64,
    pub spearman_rho: f64,
    pub n: usize,
}

pub fn correlate(xs: &[f64], ys: &[f64]) -> Result<CorrelationResult, StatsError> {
    Ok(CorrelationResult {
        pearson_r: pearson(xs, ys)?,
        spearman_rho: spearman(xs, ys)?,
        n: xs.len(),
    })
}

/// Sample standard deviation of the per-run mean RTC.
///
/// Each inner slice holds the per-task estimates of one run.
pub fn repeat_run_stddev(estimates_per_run: &[Vec<f64>]) -> Result<f64, StatsError> {
    if estimates_per_run.len() < 2 {
        return Err(StatsError::TooFew {
            min: 2,
            got: estimates_per_run.len(),
        });
    }
    if let Some(empty) = estimates_per_run.iter().find(|r| r.is_empty()) {
        return Err(StatsError::TooFew {
            min: 1,
            got: empty.len(),
        });
    }
    let run_means: Vec<f64> = estimates_per_run.iter().map(|r| mean(r)).collect();
    let m = mean(&run_means);
    let ss: f64 = run_means.iter().map(|x| (x - m) * (x - m)).sum();
    Ok((ss / (run_means.len() - 1) as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthGroup {
    ZeroScore,
    NonzeroScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBucket {
    pub start: usize,
    pub end: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthStats {
    pub group: LengthGroup,
    /// `None` when the group is empty.
    pub mean_chars: Option<f64>,
    pub count: usize,
    pub histogram: Vec<HistogramBucket>,
}

/// Splits `(output_chars, score)` samples by whether the score is zero and
/// summarizes each side's output lengths.
pub fn length_stats(samples: &[(usize, f64)]) -> (LengthStats, LengthStats) {
    let zero: Vec<usize> = samples.iter().filter(|s| s.1 == 0.0).map(|s| s.0).collect();
    let nonzero: Vec<usize> = samples.iter().filter(|s| s.1 != 0.0).map(|s| s.0).collect();
    (
        summarize_lengths(LengthGroup::ZeroScore, &zero),
        summarize_lengths(LengthGroup::NonzeroScore, &nonzero),
    )
}

fn summarize_lengths(group: LengthGroup, lengths: &[usize]) -> LengthStats {
    let mean_chars = if lengths.is_empty() {
        None
    } else {
        Some(lengths.iter().sum::<usize>() as f64 / lengths.len() as f64)
    };
    let mut histogram: Vec<HistogramBucket> = Vec::new();
    if let Some(&max) = lengths.iter().max() {
        let buckets = max / LENGTH_BUCKET_WIDTH + 1;
        histogram = (0..buckets)
            .map(|b| HistogramBucket {
                start: b * LENGTH_BUCKET_WIDTH,
                end: (b + 1) * LENGTH_BUCKET_WIDTH,
                count: 0,
            })
            .collect();
        for &len in lengths {
            histogram[len / LENGTH_BUCKET_WIDTH].count += 1;
        }
    }
    LengthStats {
        group,
        mean_chars,
        count: lengths.len(),
        histogram,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectRow {
    pub project_id: String,
    pub mean_rtc: f64,
    pub mean_lift: Option<f64>,
    pub n: usize,
}

/// Per-project means, sorted by mean RTC descending (ties by project id).
pub fn per_project_table(estimates: &[GroupedEstimate]) -> Vec<ProjectRow> {
    let summary = aggregate(estimates);
    let mut rows: Vec<ProjectRow> = summary
        .groups
        .into_iter()
        .map(|(project_id, g)| ProjectRow {
            project_id,
            mean_rtc: g.mean_rtc,
            mean_lift: g.mean_lift,
            n: g.n,
        })
        .collect();
    rows.sort_by(|a, b| {
        b.mean_rtc
            .partial_cmp(&a.mean_rtc)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.project_id.cmp(&b.project_id))
    });
    rows
}

pub fn write_project_csv<W: Write>(rows: &[ProjectRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "project_id,mean_rtc,mean_lift,n")?;
    for row in rows {
        let lift = row.mean_lift.map(|l| l.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{}", csv_field(&row.project_id), row.mean_rtc, lift, row.n)?;
    }
    Ok(())
}

pub fn write_length_csv<W: Write>(groups: &[&LengthStats], mut out: W) -> std::io::Result<()> {
    writeln!(out, "group,bucket_start,bucket_end,count")?;
    for stats in groups {
        let name = match stats.group {
            LengthGroup::ZeroScore => "zero_score",
            LengthGroup::NonzeroScore => "nonzero_score",
        };
        for b in &stats.histogram {
            writeln!(out, "{name},{},{},{}", b.start, b.end, b.count)?;
        }
    }
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
