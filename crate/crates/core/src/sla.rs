//! SLA violation extraction and the five violation-time metrics.
//!
//! A task violates the SLA when its execution time strictly exceeds the
//! threshold `t`. Violations are raised per task on its node, but violation
//! time is system-wide: the system is clean only while no node has a
//! violation in progress.
//!
//! | metric | formula | analogue |
//! |--------|---------|----------|
//! | M1 | clean time / violations | MTBF |
//! | M2 | violation time / violations | MTTR |
//! | M3 | clean time / horizon | availability |
//! | M4 | M1 / (1 + M1) | reliability |
//! | M5 | 1 / (1 + M2) | maintainability |

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::interval::{complement, interval_union, Interval, IntervalSet};
use crate::time::{Duration, TimePoint};
use crate::trace::{NodeId, TaskId, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlaError {
    NonPositiveThreshold,
    TaskOutsideHorizon { task_id: TaskId },
}

impl fmt::Display for SlaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SlaError::NonPositiveThreshold => write!(f, "SLA threshold must be positive"),
            SlaError::TaskOutsideHorizon { task_id } => {
                write!(f, "task {task_id} lies outside the trace horizon")
            }
        }
    }
}

impl core::error::Error for SlaError {}

/// Which part of a violating task counts as violation time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpanRule {
    /// `[submit + t, finish)`: only the time after the threshold was crossed.
    #[default]
    Excess,
    /// `[submit, finish)`: the whole task.
    FullTask,
}

impl SpanRule {
    pub fn as_str(self) -> &'static str {
        match self {
            SpanRule::Excess => "excess",
            SpanRule::FullTask => "full",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "excess" => Some(SpanRule::Excess),
            "full" => Some(SpanRule::FullTask),
            _ => None,
        }
    }
}

/// What "Number of Violations" counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CountMode {
    /// Every violating task.
    #[default]
    Tasks,
    /// Maximal system-wide violation spans.
    MergedSpans,
}

impl CountMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CountMode::Tasks => "tasks",
            CountMode::MergedSpans => "spans",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "tasks" => Some(CountMode::Tasks),
            "spans" => Some(CountMode::MergedSpans),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlaPolicy {
    threshold: Duration,
    pub span_rule: SpanRule,
    pub count_mode: CountMode,
}

impl SlaPolicy {
    pub fn new(threshold: Duration) -> Result<Self, SlaError> {
        if threshold.is_zero() {
            return Err(SlaError::NonPositiveThreshold);
        }
        Ok(SlaPolicy {
            threshold,
            span_rule: SpanRule::default(),
            count_mode: CountMode::default(),
        })
    }

    pub fn with_span_rule(mut self, rule: SpanRule) -> Self {
        self.span_rule = rule;
        self
    }

    pub fn with_count_mode(mut self, mode: CountMode) -> Self {
        self.count_mode = mode;
        self
    }

    pub fn threshold(&self) -> Duration {
        self.threshold
    }
}

/// A maximal run of violation time on one node, with the tasks behind it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViolationEpisode {
    pub node_id: NodeId,
    pub span: Interval,
    pub source_task_ids: Vec<TaskId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViolationSummary {
    pub count_mode: CountMode,
    /// Number of Violations(t) under `count_mode`.
    pub num_violations: u64,
    pub violating_tasks: u64,
    pub horizon: Interval,
    /// Time(Violations(t)): union of every node-level span.
    pub time_violations: IntervalSet,
    /// Time(No Violations(t)): complement of the above over the horizon.
    pub time_no_violations: IntervalSet,
    pub per_node_episodes: BTreeMap<NodeId, Vec<ViolationEpisode>>,
}

impl ViolationSummary {
    pub fn violation_time(&self) -> Duration {
        self.time_violations.measure()
    }

    pub fn clean_time(&self) -> Duration {
        self.time_no_violations.measure()
    }
}

/// Merges one node's spans into episodes, keeping track of contributing tasks.
fn node_episodes(node_id: NodeId, mut spans: Vec<(Interval, TaskId)>) -> Vec<ViolationEpisode> {
    spans.sort_unstable();
    let mut out: Vec<ViolationEpisode> = Vec::new();
    for (span, task) in spans {
        match out.last_mut() {
            Some(ep) if span.start() <= ep.span.end() => {
                if span.end() > ep.span.end() {
                    // both endpoints already validated, start < new end
                    ep.span = Interval::new(ep.span.start(), span.end()).expect("extends episode");
                }
                ep.source_task_ids.push(task);
            }
            _ => out.push(ViolationEpisode { node_id, span, source_task_ids: alloc::vec![task] }),
        }
    }
    out
}

/// Finds every violating task and builds the system-wide violation sets.
pub fn extract_violations(trace: &Trace, policy: &SlaPolicy) -> Result<ViolationSummary, SlaError> {
    let t = policy.threshold();
    if t.is_zero() {
        return Err(SlaError::NonPositiveThreshold);
    }
    let horizon = trace.horizon();

    let mut by_node: BTreeMap<NodeId, Vec<(Interval, TaskId)>> = BTreeMap::new();
    let mut violating_tasks = 0u64;
    for task in trace.tasks() {
        if task.submit_time < horizon.start() || task.finish_time > horizon.end() {
            return Err(SlaError::TaskOutsideHorizon { task_id: task.task_id });
        }
        if task.exec_time() <= t {
            continue;
        }
        violating_tasks += 1;
        let start: TimePoint = match policy.span_rule {
            SpanRule::Excess => task.submit_time + t,
            SpanRule::FullTask => task.submit_time,
        };
        // exec_time > t > 0 keeps both variants non-empty
        let span = Interval::new(start, task.finish_time).expect("violating span is non-empty");
        by_node.entry(task.node_id).or_default().push((span, task.task_id));
    }

    let per_node_episodes: BTreeMap<NodeId, Vec<ViolationEpisode>> = by_node
        .into_iter()
        .map(|(node, spans)| (node, node_episodes(node, spans)))
        .collect();

    let all_spans: Vec<Interval> =
        per_node_episodes.values().flatten().map(|ep| ep.span).collect();
    let time_violations = interval_union(&all_spans);
    let time_no_violations = complement(&time_violations, horizon)
        .map_err(|_| SlaError::TaskOutsideHorizon { task_id: 0 })?;

    let num_violations = match policy.count_mode {
        CountMode::Tasks => violating_tasks,
        CountMode::MergedSpans => time_violations.len() as u64,
    };

    Ok(ViolationSummary {
        count_mode: policy.count_mode,
        num_violations,
        violating_tasks,
        horizon,
        time_violations,
        time_no_violations,
        per_node_episodes,
    })
}

/// Returned by M1 when there is nothing to divide by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoViolations;

impl fmt::Display for NoViolations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "no SLA violations: metric undefined (perfect)")
    }
}

impl core::error::Error for NoViolations {}

/// M1: mean clean time per violation, in seconds.
pub fn m1(summary: &ViolationSummary) -> Result<f64, NoViolations> {
    if summary.num_violations == 0 {
        return Err(NoViolations);
    }
    Ok(summary.clean_time().as_secs_f64() / summary.num_violations as f64)
}

/// M2: mean violation time per violation, in seconds. Zero without violations.
pub fn m2(summary: &ViolationSummary) -> f64 {
    if summary.num_violations == 0 {
        return 0.0;
    }
    summary.violation_time().as_secs_f64() / summary.num_violations as f64
}

/// M3: fraction of the horizon with no violation anywhere.
pub fn m3(summary: &ViolationSummary) -> f64 {
    let clean = summary.clean_time().as_micros();
    let total = clean + summary.violation_time().as_micros();
    clean as f64 / total as f64
}

/// M4 from an M1 value: `m1 / (1 + m1)`.
pub fn m4(m1_value: f64) -> f64 {
    m1_value / (1.0 + m1_value)
}

/// M5 from an M2 value: `1 / (1 + m2)`.
pub fn m5(m2_value: f64) -> f64 {
    1.0 / (1.0 + m2_value)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlaReport {
    pub threshold: Duration,
    pub span_rule: SpanRule,
    /// `None` means no violations: M1 is unbounded ("perfect").
    pub m1_s: Option<f64>,
    pub m2_s: f64,
    pub m3: f64,
    /// `None` exactly when `m1_s` is; the limiting value is 1.
    pub m4: Option<f64>,
    pub m5: f64,
    pub summary: ViolationSummary,
}

impl SlaReport {
    pub fn is_perfect(&self) -> bool {
        self.m1_s.is_none()
    }

    /// M4 with the zero-violation limit substituted.
    pub fn m4_or_limit(&self) -> f64 {
        self.m4.unwrap_or(1.0)
    }
}

pub fn sla_report(trace: &Trace, policy: &SlaPolicy) -> Result<SlaReport, SlaError> {
    let summary = extract_violations(trace, policy)?;
    let m1_s = m1(&summary).ok();
    let m2_s = m2(&summary);
    Ok(SlaReport {
        threshold: policy.threshold(),
        span_rule: policy.span_rule,
        m1_s,
        m2_s,
        m3: m3(&summary),
        m4: m1_s.map(m4),
        m5: m5(m2_s),
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{NodeTimeline, TaskRecord};
    use alloc::vec;

    const S: u64 = 1_000_000;

    fn tp(us: u64) -> TimePoint {
        TimePoint::from_micros(us)
    }

    fn task(id: u64, node: u32, submit: u64, finish: u64) -> TaskRecord {
        TaskRecord::new(id, node, tp(submit), tp(submit), tp(finish)).unwrap()
    }

    fn trace(tasks: Vec<TaskRecord>, end: u64) -> Trace {
        Trace::new(tasks, Interval::from_micros(0, end).unwrap(), NodeTimeline::constant(tp(0), 5))
            .unwrap()
    }

    fn policy_ms(ms: u64) -> SlaPolicy {
        SlaPolicy::new(Duration::from_millis(ms)).unwrap()
    }

    #[test]
    fn clean_trace() {
        let tr = trace(vec![task(1, 0, 0, 50_000), task(2, 1, S, S + 100_000)], 3 * S);
        let r = sla_report(&tr, &policy_ms(100)).unwrap();
        assert_eq!(r.summary.num_violations, 0);
        assert!(r.summary.time_violations.is_empty());
        assert_eq!(r.summary.time_no_violations.intervals(), &[tr.horizon()]);
        assert!(r.is_perfect());
        assert_eq!(r.m4, None);
        assert_eq!(r.m4_or_limit(), 1.0);
        assert_eq!(r.m2_s, 0.0);
        assert_eq!(r.m3, 1.0);
        assert_eq!(r.m5, 1.0);
    }

    #[test]
    fn exactly_threshold_is_compliant() {
        let tr = trace(vec![task(1, 0, 0, 100_000), task(2, 0, 0, 100_001)], S);
        let s = extract_violations(&tr, &policy_ms(100)).unwrap();
        assert_eq!(s.num_violations, 1);
        assert_eq!(s.violation_time(), Duration::from_micros(1));
    }

    #[test]
    fn overlapping_excess_spans_on_two_nodes() {
        // t = 1 s; excess spans [3,5) and [4,6)
        let tr = trace(vec![task(1, 0, 2 * S, 5 * S), task(2, 1, 3 * S, 6 * S)], 10 * S);
        let pol = SlaPolicy::new(Duration::from_secs(1)).unwrap();
        let s = extract_violations(&tr, &pol).unwrap();
        assert_eq!(s.num_violations, 2);
        assert_eq!(s.violation_time(), Duration::from_secs(3));
        assert_eq!(s.time_violations.len(), 1);
        assert_eq!(s.per_node_episodes.len(), 2);

        let spans = extract_violations(&tr, &pol.with_count_mode(CountMode::MergedSpans)).unwrap();
        assert_eq!(spans.num_violations, 1);

        let full = extract_violations(&tr, &pol.with_span_rule(SpanRule::FullTask)).unwrap();
        assert_eq!(full.violation_time(), Duration::from_secs(4));
    }

    #[test]
    fn same_node_spans_become_one_episode() {
        let tr = trace(vec![task(1, 3, 0, 2 * S), task(2, 3, S / 2, 3 * S)], 5 * S);
        let s = extract_violations(&tr, &policy_ms(100)).unwrap();
        let eps = &s.per_node_episodes[&3];
        assert_eq!(eps.len(), 1);
        assert_eq!(eps[0].span, Interval::from_micros(100_000, 3 * S).unwrap());
        assert_eq!(eps[0].source_task_ids, vec![1, 2]);
    }

    #[test]
    fn zero_threshold_rejected() {
        assert_eq!(SlaPolicy::new(Duration::ZERO), Err(SlaError::NonPositiveThreshold));
    }

    #[test]
    fn metric_formulas() {
        let h = Interval::from_micros(0, 14 * S).unwrap();
        let viol = interval_union(&[Interval::from_micros(0, 4 * S).unwrap()]);
        let summary = ViolationSummary {
            count_mode: CountMode::Tasks,
            num_violations: 4,
            violating_tasks: 4,
            horizon: h,
            time_no_violations: complement(&viol, h).unwrap(),
            time_violations: viol,
            per_node_episodes: BTreeMap::new(),
        };
        assert_eq!(m1(&summary), Ok(2.5));
        assert_eq!(m2(&summary), 1.0);
        assert_eq!(m3(&summary), 10.0 / 14.0);

        let mut five = summary.clone();
        five.num_violations = 5;
        assert_eq!(m1(&five), Ok(2.0));
    }

    #[test]
    fn m4_m5_values() {
        assert_eq!(m4(0.0), 0.0);
        assert_eq!(m5(0.0), 1.0);
        assert!((m4(1.754) - 0.637).abs() <= 0.002);
        assert!((m4(2.217) - 0.689).abs() <= 0.002);
        assert!((m5(0.878) - 0.532).abs() <= 0.002);
        assert!((m5(0.980) - 0.505).abs() <= 0.002);
    }

    #[test]
    fn m3_two_thirds() {
        // 1 s violating out of a 3 s horizon
        let tr = trace(vec![task(1, 0, 0, S + 100_000)], 3 * S);
        let r = sla_report(&tr, &policy_ms(100)).unwrap();
        assert_eq!(r.m3, 2.0 / 3.0);
        assert_eq!(r.m1_s, Some(2.0));
        assert_eq!(r.m2_s, 1.0);
    }
}
