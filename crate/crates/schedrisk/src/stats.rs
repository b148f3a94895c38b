//! Summary statistics, boxplot descriptors, comparison arithmetic, and the
//! CSV results format.
//!
//! Quantiles use linear interpolation of order statistics, `h = (n-1)·q`.
//! Standard deviations use the n−1 denominator. Outliers are samples
//! strictly outside the Tukey fences `[q1 − 1.5·iqr, q3 + 1.5·iqr]`;
//! whiskers are the most extreme samples inside the fences, clamped to the
//! box so the ordering chain `min ≤ whisker_low ≤ q1 ≤ median ≤ q3 ≤
//! whisker_high ≤ max` holds even for degenerate sample sets.

use serde::Serialize;
use thiserror::Error;

use crate::model::TaskCategory;
use crate::sim::ResultSet;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("empty sample set")]
    EmptyInput,
    #[error("quantile {0} outside [0, 1]")]
    QuantileRange(f64),
    #[error("baseline must be positive, got {0}")]
    NonPositiveBaseline(f64),
    #[error("line {line}: {message}")]
    Csv { line: usize, message: String },
}

/// Descriptive statistics of one metric's samples, all in days.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryStatistics {
    pub n: usize,
    pub median: f64,
    pub mean: f64,
    pub sample_std: f64,
    pub min: f64,
    pub max: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers_low: usize,
    pub outliers_high: usize,
}

/// Data behind one boxplot: box, whiskers, and the outlier values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxplotDescriptor {
    pub label: String,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

/// Baseline-vs-transformed statistics for one metric, with percent
/// reductions of the median, mean, and standard deviation. Reductions are
/// kept at full precision; `display` carries the half-up 1-decimal strings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricComparison {
    pub metric: String,
    pub baseline: SummaryStatistics,
    pub transformed: SummaryStatistics,
    pub reduction_pct_median: Option<f64>,
    pub reduction_pct_mean: Option<f64>,
    pub reduction_pct_std: Option<f64>,
    pub display: ReductionDisplay,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionDisplay {
    pub median: String,
    pub mean: String,
    pub std: String,
}

/// Comparison of two result sets across the total and every category.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub baseline_model: String,
    pub transformed_model: String,
    pub iterations: u64,
    pub metrics: Vec<MetricComparison>,
}

/// Linear-interpolation quantile of `samples` at `q` in `[0, 1]`.
pub fn quantile(samples: &[f64], q: f64) -> Result<f64, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(StatsError::QuantileRange(q));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("samples must not contain NaN"));
    Ok(quantile_sorted(&sorted, q))
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if frac == 0.0 || lo + 1 == sorted.len() {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Compute the full summary of a nonempty sample set.
pub fn summarize(samples: &[f64]) -> Result<SummaryStatistics, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("samples must not contain NaN"));
    let n = sorted.len();
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let sample_std = if n > 1 {
        (sorted.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let median = quantile_sorted(&sorted, 0.5);
    let q1 = quantile_sorted(&sorted, 0.25);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    let fence_low = q1 - 1.5 * iqr;
    let fence_high = q3 + 1.5 * iqr;
    let outliers_low = sorted.iter().take_while(|x| **x < fence_low).count();
    let outliers_high = sorted.iter().rev().take_while(|x| **x > fence_high).count();
    let inside = &sorted[outliers_low..n - outliers_high];
    let (whisker_low, whisker_high) = if inside.is_empty() {
        (q1, q3)
    } else {
        (inside[0].min(q1), inside[inside.len() - 1].max(q3))
    };
    Ok(SummaryStatistics {
        n,
        median,
        mean,
        sample_std,
        min: sorted[0],
        max: sorted[n - 1],
        q1,
        q3,
        iqr,
        whisker_low,
        whisker_high,
        outliers_low,
        outliers_high,
    })
}

/// Percent reduction from `baseline` to `transformed`, full precision.
pub fn percent_reduction(baseline: f64, transformed: f64) -> Result<f64, StatsError> {
    if baseline <= 0.0 {
        return Err(StatsError::NonPositiveBaseline(baseline));
    }
    Ok(100.0 * (baseline - transformed) / baseline)
}

/// Round half-up to one decimal, for display.
pub fn round_half_up_1dp(x: f64) -> f64 {
    (x * 10.0 + 0.5).floor() / 10.0
}

/// Display form of a percent reduction: half-up, one decimal.
pub fn format_reduction(pct: Option<f64>) -> String {
    match pct {
        Some(p) => format!("{:.1}", round_half_up_1dp(p)),
        None => "n/a".to_owned(),
    }
}

/// Boxplot data for `samples`, with outliers listed ascending.
pub fn boxplot_descriptor(label: &str, samples: &[f64]) -> Result<BoxplotDescriptor, StatsError> {
    let s = summarize(samples)?;
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("samples must not contain NaN"));
    let mut outliers = Vec::with_capacity(s.outliers_low + s.outliers_high);
    outliers.extend_from_slice(&sorted[..s.outliers_low]);
    outliers.extend_from_slice(&sorted[sorted.len() - s.outliers_high..]);
    Ok(BoxplotDescriptor {
        label: label.to_owned(),
        q1: s.q1,
        median: s.median,
        q3: s.q3,
        whisker_low: s.whisker_low,
        whisker_high: s.whisker_high,
        outliers,
    })
}

fn reduction_of(baseline: f64, transformed: f64) -> Option<f64> {
    (baseline > 0.0).then(|| 100.0 * (baseline - transformed) / baseline)
}

fn compare_metric(
    metric: &str,
    baseline: &[f64],
    transformed: &[f64],
) -> Result<MetricComparison, StatsError> {
    let b = summarize(baseline)?;
    let t = summarize(transformed)?;
    let median = reduction_of(b.median, t.median);
    let mean = reduction_of(b.mean, t.mean);
    let std = reduction_of(b.sample_std, t.sample_std);
    Ok(MetricComparison {
        metric: metric.to_owned(),
        display: ReductionDisplay {
            median: format_reduction(median),
            mean: format_reduction(mean),
            std: format_reduction(std),
        },
        baseline: b,
        transformed: t,
        reduction_pct_median: median,
        reduction_pct_mean: mean,
        reduction_pct_std: std,
    })
}

/// Compare two runs metric by metric: the total plus every category.
pub fn compare(
    baseline: &ResultSet,
    transformed: &ResultSet,
) -> Result<ComparisonReport, StatsError> {
    let mut metrics = Vec::with_capacity(1 + TaskCategory::ALL.len());
    metrics.push(compare_metric(
        "total",
        &baseline.totals(),
        &transformed.totals(),
    )?);
    for category in TaskCategory::ALL {
        metrics.push(compare_metric(
            category.wire_name(),
            &baseline.category_samples(category),
            &transformed.category_samples(category),
        )?);
    }
    Ok(ComparisonReport {
        baseline_model: baseline.model_name.clone(),
        transformed_model: transformed.model_name.clone(),
        iterations: baseline.config.iterations,
        metrics,
    })
}

pub const CSV_HEADER: &str =
    "iteration,total,eliciting_requirements,information_exchange,system_modeling,disciplinary_modeling,review_meetings";

/// Render a result set as CSV: the fixed header, one row per iteration in
/// order, every value with exactly six decimals, LF line endings. Output is
/// byte-deterministic for a given result set.
pub fn export_results_csv(rs: &ResultSet) -> String {
    let mut out = String::with_capacity(64 * (rs.outcomes.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (i, outcome) in rs.outcomes.iter().enumerate() {
        out.push_str(&i.to_string());
        push_cell(&mut out, outcome.total);
        for category in TaskCategory::ALL {
            push_cell(&mut out, outcome.category_work.get(category));
        }
        out.push('\n');
    }
    out
}

fn push_cell(out: &mut String, value: f64) {
    use std::fmt::Write;
    write!(out, ",{value:.6}").expect("writing to String cannot fail");
}

/// Per-metric sample columns of a run; the CSV-facing view of a result set.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub totals: Vec<f64>,
    pub categories: [Vec<f64>; 5],
}

impl ResultTable {
    pub fn from_result_set(rs: &ResultSet) -> ResultTable {
        ResultTable {
            totals: rs.totals(),
            categories: TaskCategory::ALL.map(|c| rs.category_samples(c)),
        }
    }

    /// `(label, samples)` pairs in report order.
    pub fn metrics(&self) -> Vec<(&'static str, &[f64])> {
        let mut v: Vec<(&'static str, &[f64])> = vec![("total", &self.totals)];
        for (i, category) in TaskCategory::ALL.iter().enumerate() {
            v.push((category.wire_name(), &self.categories[i]));
        }
        v
    }
}

/// Parse a results CSV produced by [`export_results_csv`].
pub fn parse_results_csv(text: &str) -> Result<ResultTable, StatsError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == CSV_HEADER => {}
        Some((_, header)) => {
            return Err(StatsError::Csv {
                line: 1,
                message: format!("unexpected header \"{header}\""),
            })
        }
        None => {
            return Err(StatsError::Csv {
                line: 1,
                message: "missing header".into(),
            })
        }
    }
    let mut table = ResultTable {
        totals: Vec::new(),
        categories: Default::default(),
    };
    for (index, line) in lines {
        if line.is_empty() {
            continue;
        }
        let line_no = index + 1;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 7 {
            return Err(StatsError::Csv {
                line: line_no,
                message: format!("expected 7 columns, found {}", cells.len()),
            });
        }
        let parse = |cell: &str| -> Result<f64, StatsError> {
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(StatsError::Csv {
                    line: line_no,
                    message: format!("not a finite number: \"{cell}\""),
                }),
            }
        };
        table.totals.push(parse(cells[1])?);
        for (i, cell) in cells[2..].iter().enumerate() {
            table.categories[i].push(parse(cell)?);
        }
    }
    if table.totals.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    Ok(table)
}
