//! Completed-task records and the per-run trace they belong to.

use alloc::vec::Vec;
use core::fmt;

use crate::interval::Interval;
use crate::time::{Duration, TimePoint};

pub type TaskId = u64;
pub type NodeId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceError {
    /// Task times are not ordered `submit <= start <= finish`.
    NonMonotoneTask { task_id: TaskId },
    /// Task `[submit, finish]` is not inside the horizon.
    TaskOutsideHorizon { task_id: TaskId },
    DuplicateTaskId { task_id: TaskId },
    EmptyNodeTimeline,
    /// The first change-point must sit at the horizon start.
    TimelineStart { expected: TimePoint, found: TimePoint },
    /// Change-point times must be strictly increasing and inside the horizon.
    TimelineOrder { index: usize },
    /// Node counts must be at least one.
    TimelineCount { index: usize },
    /// Trimming would leave an empty horizon.
    TrimTooLong,
}

impl fmt::Display for TraceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceError::NonMonotoneTask { task_id } => {
                write!(f, "task {task_id}: times must satisfy submit <= start <= finish")
            }
            TraceError::TaskOutsideHorizon { task_id } => {
                write!(f, "task {task_id} lies outside the trace horizon")
            }
            TraceError::DuplicateTaskId { task_id } => write!(f, "duplicate task id {task_id}"),
            TraceError::EmptyNodeTimeline => write!(f, "node timeline has no change-points"),
            TraceError::TimelineStart { expected, found } => write!(
                f,
                "node timeline starts at {found}, expected horizon start {expected}"
            ),
            TraceError::TimelineOrder { index } => {
                write!(f, "node timeline point {index} is out of order or past the horizon")
            }
            TraceError::TimelineCount { index } => {
                write!(f, "node timeline point {index} has a zero node count")
            }
            TraceError::TrimTooLong => write!(f, "warm-up trim consumes the whole horizon"),
        }
    }
}

impl core::error::Error for TraceError {}

/// One completed task.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaskRecord {
    pub task_id: TaskId,
    pub node_id: NodeId,
    pub submit_time: TimePoint,
    pub start_time: TimePoint,
    pub finish_time: TimePoint,
}

impl TaskRecord {
    pub fn new(
        task_id: TaskId,
        node_id: NodeId,
        submit_time: TimePoint,
        start_time: TimePoint,
        finish_time: TimePoint,
    ) -> Result<Self, TraceError> {
        let rec = TaskRecord { task_id, node_id, submit_time, start_time, finish_time };
        if rec.is_monotone() {
            Ok(rec)
        } else {
            Err(TraceError::NonMonotoneTask { task_id })
        }
    }

    pub fn is_monotone(&self) -> bool {
        self.submit_time <= self.start_time && self.start_time <= self.finish_time
    }

    /// Execution time `finish - submit`; queueing delay is part of it.
    pub fn exec_time(&self) -> Duration {
        self.finish_time.saturating_duration_since(self.submit_time)
    }
}

/// Piecewise-constant count of provisioned nodes over time.
///
/// Stored as change-points `(time, count)`; each count holds until the next
/// change-point or the end of the horizon.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeTimeline {
    points: Vec<(TimePoint, u32)>,
}

impl NodeTimeline {
    pub fn constant(start: TimePoint, count: u32) -> Self {
        NodeTimeline { points: alloc::vec![(start, count)] }
    }

    /// Builds a timeline, dropping change-points that repeat the previous count.
    pub fn from_points(points: Vec<(TimePoint, u32)>) -> Self {
        let mut out: Vec<(TimePoint, u32)> = Vec::with_capacity(points.len());
        for p in points {
            match out.last_mut() {
                Some(last) if last.0 == p.0 => last.1 = p.1,
                Some(last) if last.1 == p.1 => {}
                _ => out.push(p),
            }
        }
        NodeTimeline { points: out }
    }

    pub fn points(&self) -> &[(TimePoint, u32)] {
        &self.points
    }

    pub fn count_at(&self, t: TimePoint) -> u32 {
        let idx = self.points.partition_point(|&(pt, _)| pt <= t);
        if idx == 0 {
            self.points.first().map_or(0, |p| p.1)
        } else {
            self.points[idx - 1].1
        }
    }

    pub fn min_count(&self) -> u32 {
        self.points.iter().map(|p| p.1).min().unwrap_or(0)
    }

    pub fn max_count(&self) -> u32 {
        self.points.iter().map(|p| p.1).max().unwrap_or(0)
    }

    /// Integral of the node count over `horizon`, in node-microseconds.
    pub fn node_micros(&self, horizon: &Interval) -> u128 {
        let mut total: u128 = 0;
        for (i, &(t, count)) in self.points.iter().enumerate() {
            let seg_start = t.max(horizon.start());
            let seg_end = self
                .points
                .get(i + 1)
                .map_or(horizon.end(), |next| next.0)
                .min(horizon.end());
            if seg_end > seg_start {
                let len = seg_end.as_micros() - seg_start.as_micros();
                total += u128::from(len) * u128::from(count);
            }
        }
        total
    }

    fn validate(&self, horizon: &Interval) -> Result<(), TraceError> {
        let first = self.points.first().ok_or(TraceError::EmptyNodeTimeline)?;
        if first.0 != horizon.start() {
            return Err(TraceError::TimelineStart { expected: horizon.start(), found: first.0 });
        }
        for (index, w) in self.points.windows(2).enumerate() {
            if w[1].0 <= w[0].0 {
                return Err(TraceError::TimelineOrder { index: index + 1 });
            }
        }
        if let Some(index) = self.points.iter().position(|p| p.0 >= horizon.end()) {
            return Err(TraceError::TimelineOrder { index });
        }
        if let Some(index) = self.points.iter().position(|p| p.1 == 0) {
            return Err(TraceError::TimelineCount { index });
        }
        Ok(())
    }
}

/// All completed tasks of one run, its observation window and node pool history.
///
/// Tasks are kept sorted by `(finish_time, task_id)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    tasks: Vec<TaskRecord>,
    horizon: Interval,
    nodes: NodeTimeline,
}

impl Trace {
    pub fn new(
        mut tasks: Vec<TaskRecord>,
        horizon: Interval,
        nodes: NodeTimeline,
    ) -> Result<Self, TraceError> {
        for t in &tasks {
            if !t.is_monotone() {
                return Err(TraceError::NonMonotoneTask { task_id: t.task_id });
            }
            if t.submit_time < horizon.start() || t.finish_time > horizon.end() {
                return Err(TraceError::TaskOutsideHorizon { task_id: t.task_id });
            }
        }
        nodes.validate(&horizon)?;

        let mut ids: Vec<TaskId> = tasks.iter().map(|t| t.task_id).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(TraceError::DuplicateTaskId { task_id: w[0] });
        }

        tasks.sort_by_key(|t| (t.finish_time, t.task_id));
        Ok(Trace { tasks, horizon, nodes })
    }

    pub fn tasks(&self) -> &[TaskRecord] {
        &self.tasks
    }

    pub fn horizon(&self) -> Interval {
        self.horizon
    }

    pub fn nodes(&self) -> &NodeTimeline {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    /// Execution times in seconds, in trace order.
    pub fn exec_times_secs(&self) -> Vec<f64> {
        self.tasks.iter().map(|t| t.exec_time().as_secs_f64()).collect()
    }

    /// Node-seconds provisioned over the horizon.
    pub fn node_seconds(&self) -> f64 {
        self.nodes.node_micros(&self.horizon) as f64 / 1e6
    }

    /// Drops the first `warmup` of the horizon together with every task
    /// submitted inside it.
    pub fn trim_start(&self, warmup: Duration) -> Result<Trace, TraceError> {
        if warmup.is_zero() {
            return Ok(self.clone());
        }
        let new_start = self.horizon.start() + warmup;
        let horizon =
            Interval::new(new_start, self.horizon.end()).map_err(|_| TraceError::TrimTooLong)?;
        let tasks: Vec<TaskRecord> =
            self.tasks.iter().filter(|t| t.submit_time >= new_start).copied().collect();

        let mut points = alloc::vec![(new_start, self.nodes.count_at(new_start))];
        points.extend(self.nodes.points.iter().filter(|p| p.0 > new_start).copied());
        Trace::new(tasks, horizon, NodeTimeline::from_points(points))
    }
}
