//! Conventional latency statistics over a sample of execution times.
//!
//! Moments are population moments (divide by `n`), kurtosis is raw
//! (a normal distribution scores about 3) and the tail percentile uses the
//! nearest-rank rule.

use alloc::vec::Vec;
use core::fmt;

use crate::trace::Trace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricError {
    EmptySample,
    /// The sample is non-empty but the statistic is undefined for it.
    DegenerateSample(Degenerate),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Degenerate {
    TooFewPoints { needed: usize, got: usize },
    ZeroVariance,
}

impl MetricError {
    /// Short machine-readable reason code.
    pub fn code(&self) -> &'static str {
        match self {
            MetricError::EmptySample => "empty-sample",
            MetricError::DegenerateSample(Degenerate::TooFewPoints { .. }) => "too-few-points",
            MetricError::DegenerateSample(Degenerate::ZeroVariance) => "zero-variance",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        match code {
            "empty-sample" => Some(MetricError::EmptySample),
            "zero-variance" => Some(MetricError::DegenerateSample(Degenerate::ZeroVariance)),
            // the point counts are not carried in the code
            "too-few-points" => Some(MetricError::DegenerateSample(Degenerate::TooFewPoints {
                needed: 0,
                got: 0,
            })),
            _ => None,
        }
    }
}

impl fmt::Display for MetricError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricError::EmptySample => write!(f, "sample is empty"),
            MetricError::DegenerateSample(Degenerate::TooFewPoints { needed, got }) => {
                write!(f, "statistic needs at least {needed} points, got {got}")
            }
            MetricError::DegenerateSample(Degenerate::ZeroVariance) => {
                write!(f, "sample has zero variance")
            }
        }
    }
}

impl core::error::Error for MetricError {}

fn non_empty(sample: &[f64]) -> Result<(), MetricError> {
    if sample.is_empty() {
        Err(MetricError::EmptySample)
    } else {
        Ok(())
    }
}

fn is_constant(sample: &[f64]) -> bool {
    sample.iter().all(|&x| x == sample[0])
}

/// Arithmetic mean. Accumulates offsets from the first element so a
/// constant sample returns that constant exactly.
pub fn mean(sample: &[f64]) -> Result<f64, MetricError> {
    non_empty(sample)?;
    let shift = sample[0];
    let offset: f64 = sample.iter().map(|&x| x - shift).sum();
    Ok(shift + offset / sample.len() as f64)
}

fn sorted_copy(sample: &[f64]) -> Vec<f64> {
    let mut v = sample.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    v
}

fn median_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Middle order statistic, or the average of the two middle ones for even `n`.
pub fn median(sample: &[f64]) -> Result<f64, MetricError> {
    non_empty(sample)?;
    Ok(median_sorted(&sorted_copy(sample)))
}

/// Population central moments `(m2, m3, m4)`.
fn central_moments(sample: &[f64], mu: f64) -> (f64, f64, f64) {
    let n = sample.len() as f64;
    let (mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0);
    for &x in sample {
        let d = x - mu;
        let d2 = d * d;
        s2 += d2;
        s3 += d2 * d;
        s4 += d2 * d2;
    }
    (s2 / n, s3 / n, s4 / n)
}

/// Population standard deviation.
pub fn stddev(sample: &[f64]) -> Result<f64, MetricError> {
    non_empty(sample)?;
    if is_constant(sample) {
        return Ok(0.0);
    }
    let mu = mean(sample)?;
    let (m2, _, _) = central_moments(sample, mu);
    Ok(libm::sqrt(m2))
}

pub fn max(sample: &[f64]) -> Result<f64, MetricError> {
    non_empty(sample)?;
    Ok(sample.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

fn moments_checked(sample: &[f64], needed: usize) -> Result<(f64, f64, f64), MetricError> {
    non_empty(sample)?;
    if sample.len() < needed {
        return Err(MetricError::DegenerateSample(Degenerate::TooFewPoints {
            needed,
            got: sample.len(),
        }));
    }
    if is_constant(sample) {
        return Err(MetricError::DegenerateSample(Degenerate::ZeroVariance));
    }
    let mu = mean(sample)?;
    let moments = central_moments(sample, mu);
    if moments.0 <= 0.0 {
        return Err(MetricError::DegenerateSample(Degenerate::ZeroVariance));
    }
    Ok(moments)
}

/// Moment coefficient of skewness `m3 / m2^1.5`. Needs `n >= 3`.
pub fn skewness(sample: &[f64]) -> Result<f64, MetricError> {
    let (m2, m3, _) = moments_checked(sample, 3)?;
    Ok(m3 / libm::pow(m2, 1.5))
}

/// Raw kurtosis `m4 / m2^2` (not excess). Needs `n >= 4`.
pub fn kurtosis(sample: &[f64]) -> Result<f64, MetricError> {
    let (m2, _, m4) = moments_checked(sample, 4)?;
    Ok(m4 / (m2 * m2))
}

/// 1-indexed nearest rank `ceil(pct/100 * n)` for an integer percentage.
pub fn nearest_rank(pct: u32, n: usize) -> usize {
    let rank = (pct as usize * n).div_ceil(100);
    rank.clamp(1, n.max(1))
}

fn percentile_sorted(sorted: &[f64], pct: u32) -> f64 {
    sorted[nearest_rank(pct, sorted.len()) - 1]
}

/// Nearest-rank percentile for an integer percentage in `1..=100`.
pub fn percentile(sample: &[f64], pct: u32) -> Result<f64, MetricError> {
    non_empty(sample)?;
    let mut v = sample.to_vec();
    let idx = nearest_rank(pct, v.len()) - 1;
    let (_, value, _) = v.select_nth_unstable_by(idx, f64::total_cmp);
    Ok(*value)
}

/// 98th percentile, nearest rank.
pub fn tail_latency_p98(sample: &[f64]) -> Result<f64, MetricError> {
    percentile(sample, 98)
}

/// The seven conventional statistics for one sample, in seconds where
/// dimensional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConventionalReport {
    pub sample_size: usize,
    pub mean_s: Result<f64, MetricError>,
    pub median_s: Result<f64, MetricError>,
    pub stddev_s: Result<f64, MetricError>,
    pub max_s: Result<f64, MetricError>,
    pub skewness: Result<f64, MetricError>,
    pub kurtosis: Result<f64, MetricError>,
    pub tail_p98_s: Result<f64, MetricError>,
}

impl ConventionalReport {
    /// Never aborts: undefined statistics are carried as their error.
    pub fn from_sample(sample: &[f64]) -> Self {
        if sample.is_empty() {
            let e = Err(MetricError::EmptySample);
            return ConventionalReport {
                sample_size: 0,
                mean_s: e,
                median_s: e,
                stddev_s: e,
                max_s: e,
                skewness: e,
                kurtosis: e,
                tail_p98_s: e,
            };
        }
        let sorted = sorted_copy(sample);
        ConventionalReport {
            sample_size: sample.len(),
            mean_s: mean(sample),
            median_s: Ok(median_sorted(&sorted)),
            stddev_s: stddev(sample),
            max_s: Ok(sorted[sorted.len() - 1]),
            skewness: skewness(sample),
            kurtosis: kurtosis(sample),
            tail_p98_s: Ok(percentile_sorted(&sorted, 98)),
        }
    }

    /// `(name, value)` pairs in report order.
    pub fn fields(&self) -> [(&'static str, Result<f64, MetricError>); 7] {
        [
            ("mean_s", self.mean_s),
            ("median_s", self.median_s),
            ("stddev_s", self.stddev_s),
            ("max_s", self.max_s),
            ("skewness", self.skewness),
            ("kurtosis", self.kurtosis),
            ("tail_p98_s", self.tail_p98_s),
        ]
    }
}

/// Conventional statistics over the execution time of every task in `trace`.
pub fn conventional_report(trace: &Trace) -> ConventionalReport {
    ConventionalReport::from_sample(&trace.exec_times_secs())
}
