//! Half-open time intervals and canonical disjoint interval sets.

use alloc::vec::Vec;
use core::fmt;

use crate::time::{Duration, TimePoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalError {
    /// The interval at `index` has `start >= end`.
    Degenerate { index: usize, start: TimePoint, end: TimePoint },
    /// The set member at `index` is not contained in the horizon.
    OutsideHorizon { index: usize },
}

impl fmt::Display for IntervalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntervalError::Degenerate { index, start, end } => write!(
                f,
                "interval {index} is empty or reversed: [{start}, {end})"
            ),
            IntervalError::OutsideHorizon { index } => {
                write!(f, "interval {index} escapes the horizon")
            }
        }
    }
}

impl core::error::Error for IntervalError {}

/// A non-empty half-open interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Interval {
    start: TimePoint,
    end: TimePoint,
}

impl Interval {
    pub fn new(start: TimePoint, end: TimePoint) -> Result<Self, IntervalError> {
        if start >= end {
            return Err(IntervalError::Degenerate { index: 0, start, end });
        }
        Ok(Interval { start, end })
    }

    pub fn from_micros(start: u64, end: u64) -> Result<Self, IntervalError> {
        Self::new(TimePoint::from_micros(start), TimePoint::from_micros(end))
    }

    pub fn start(&self) -> TimePoint {
        self.start
    }

    pub fn end(&self) -> TimePoint {
        self.end
    }

    pub fn measure(&self) -> Duration {
        Duration::from_micros(self.end.as_micros() - self.start.as_micros())
    }

    pub fn contains(&self, t: TimePoint) -> bool {
        self.start <= t && t < self.end
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.start, self.end)
    }
}

/// Sorted, pairwise-disjoint, non-adjacent intervals.
///
/// Construction always goes through a merge, so two sets describing the same
/// point set compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IntervalSet {
    intervals: Vec<Interval>,
}

impl IntervalSet {
    pub fn new() -> Self {
        IntervalSet { intervals: Vec::new() }
    }

    /// Union of valid intervals; see [`interval_union`].
    pub fn from_intervals(intervals: &[Interval]) -> Self {
        interval_union(intervals)
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Interval> {
        self.intervals.iter()
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn measure(&self) -> Duration {
        self.intervals.iter().map(Interval::measure).sum()
    }

    pub fn contains(&self, t: TimePoint) -> bool {
        // First interval whose end is beyond t is the only candidate.
        let idx = self.intervals.partition_point(|iv| iv.end <= t);
        self.intervals.get(idx).is_some_and(|iv| iv.contains(t))
    }

    /// Union of two canonical sets.
    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        let mut all = Vec::with_capacity(self.len() + other.len());
        all.extend_from_slice(&self.intervals);
        all.extend_from_slice(&other.intervals);
        interval_union(&all)
    }

    /// The part of `horizon` not covered by this set.
    pub fn complement(&self, horizon: Interval) -> Result<IntervalSet, IntervalError> {
        complement(self, horizon)
    }

    pub fn is_subset_of(&self, horizon: &Interval) -> bool {
        self.intervals.iter().all(|iv| horizon.contains_interval(iv))
    }
}

impl<'a> IntoIterator for &'a IntervalSet {
    type Item = &'a Interval;
    type IntoIter = core::slice::Iter<'a, Interval>;

    fn into_iter(self) -> Self::IntoIter {
        self.intervals.iter()
    }
}

/// Sweep-line merge of arbitrary intervals into a canonical set.
///
/// Overlapping and touching (`a.end == b.start`) intervals are fused.
pub fn interval_union(intervals: &[Interval]) -> IntervalSet {
    let mut sorted: Vec<Interval> = intervals.to_vec();
    sorted.sort_unstable();

    let mut merged: Vec<Interval> = Vec::with_capacity(sorted.len());
    for iv in sorted {
        match merged.last_mut() {
            Some(last) if iv.start <= last.end => {
                if iv.end > last.end {
                    last.end = iv.end;
                }
            }
            _ => merged.push(iv),
        }
    }
    IntervalSet { intervals: merged }
}

/// Union of raw `(start, end)` pairs, rejecting the first invalid one by index.
pub fn union_spans(spans: &[(TimePoint, TimePoint)]) -> Result<IntervalSet, IntervalError> {
    let intervals = spans
        .iter()
        .enumerate()
        .map(|(index, &(start, end))| {
            Interval::new(start, end).map_err(|_| IntervalError::Degenerate { index, start, end })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(interval_union(&intervals))
}

/// Gaps of `set` inside `horizon`.
///
/// `measure(set) + measure(result) == measure(horizon)` holds exactly.
pub fn complement(set: &IntervalSet, horizon: Interval) -> Result<IntervalSet, IntervalError> {
    if let Some(index) = set.intervals.iter().position(|iv| !horizon.contains_interval(iv)) {
        return Err(IntervalError::OutsideHorizon { index });
    }

    let mut gaps = Vec::with_capacity(set.len() + 1);
    let mut cursor = horizon.start;
    for iv in &set.intervals {
        if iv.start > cursor {
            gaps.push(Interval { start: cursor, end: iv.start });
        }
        cursor = iv.end;
    }
    if cursor < horizon.end {
        gaps.push(Interval { start: cursor, end: horizon.end });
    }
    Ok(IntervalSet { intervals: gaps })
}
