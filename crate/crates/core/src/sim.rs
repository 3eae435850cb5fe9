//! Discrete-event simulation of an autoscaled node pool.
//!
//! Each node serves its tasks by processor sharing: with `k` tasks resident,
//! each advances at `capacity / k` CPU-seconds per second. Service is tracked
//! with a per-node virtual clock (attained service per resident task), so a
//! task admitted at virtual time `v` with demand `d` leaves when the clock
//! reaches `v + d`.
//!
//! Events at equal timestamps are handled in the order: task completions,
//! node readiness, scaler tick, arrivals. The loop is single-threaded and
//! uses no randomness, so identical inputs give identical outputs.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::interval::Interval;
use crate::scaler::{Autoscaler, Decision, ScalerPolicy};
use crate::time::{Duration, TimePoint, MICROS_PER_SEC};
use crate::trace::{NodeId, NodeTimeline, TaskId, TaskRecord, Trace};
use crate::workload::ArrivalEvent;
use crate::SpecError;

/// How per-node utilization is reduced to the scaler's single observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UtilizationMode {
    /// Mean over active nodes.
    #[default]
    ClusterMean,
    /// Busiest active node.
    NodeMax,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterSpec {
    /// Always-on nodes.
    pub base_nodes: u32,
    /// Extra nodes the scaler may start.
    pub elastic_nodes_max: u32,
    /// CPU-seconds of work a node completes per second.
    pub capacity: f64,
    pub startup_delay: Duration,
    pub sample_period: Duration,
    pub utilization: UtilizationMode,
}

impl Default for ClusterSpec {
    fn default() -> Self {
        ClusterSpec {
            base_nodes: 5,
            elastic_nodes_max: 15,
            capacity: 1.0,
            startup_delay: Duration::from_secs(5),
            sample_period: Duration::from_secs(1),
            utilization: UtilizationMode::ClusterMean,
        }
    }
}

impl ClusterSpec {
    pub fn validate(&self) -> Result<(), SpecError> {
        let bad = |field, reason| Err(SpecError { field, reason });
        if self.base_nodes == 0 {
            return bad("cluster.base_nodes", "must be at least 1");
        }
        if !(self.capacity > 0.0 && self.capacity.is_finite()) {
            return bad("cluster.capacity", "must be positive");
        }
        if self.sample_period.is_zero() {
            return bad("cluster.sample_period", "must be positive");
        }
        Ok(())
    }

    pub fn max_nodes(&self) -> u32 {
        self.base_nodes + self.elastic_nodes_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeStatus {
    Active,
    Starting { ready_at: TimePoint },
    Draining,
    Off,
}

impl NodeStatus {
    /// Provisioned, i.e. counted in the node pool.
    pub fn is_allocated(self) -> bool {
        !matches!(self, NodeStatus::Off)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Resident {
    task_id: TaskId,
    submit: TimePoint,
    /// Virtual time at which the task has received its full demand.
    finish_v: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub id: NodeId,
    pub status: NodeStatus,
    pub is_base: bool,
    resident: Vec<Resident>,
    virtual_time: f64,
    last_update_s: f64,
    busy_in_period_s: f64,
    busy_total_s: f64,
}

impl NodeState {
    fn new(id: NodeId, is_base: bool) -> Self {
        NodeState {
            id,
            status: if is_base { NodeStatus::Active } else { NodeStatus::Off },
            is_base,
            resident: Vec::new(),
            virtual_time: 0.0,
            last_update_s: 0.0,
            busy_in_period_s: 0.0,
            busy_total_s: 0.0,
        }
    }

    pub fn queue_len(&self) -> usize {
        self.resident.len()
    }

    pub fn busy_total_s(&self) -> f64 {
        self.busy_total_s
    }

    /// Outstanding CPU-seconds of work.
    fn remaining_work(&self) -> f64 {
        self.resident.iter().map(|r| r.finish_v - self.virtual_time).sum()
    }

    fn advance(&mut self, now_s: f64, capacity: f64) {
        let dt = now_s - self.last_update_s;
        if dt <= 0.0 {
            return;
        }
        if !self.resident.is_empty() {
            self.virtual_time += dt * capacity / self.resident.len() as f64;
            self.busy_in_period_s += dt;
            self.busy_total_s += dt;
        }
        self.last_update_s = now_s;
    }

    fn next_completion_s(&self, capacity: f64) -> Option<f64> {
        let min_v = self.resident.iter().map(|r| r.finish_v).reduce(f64::min)?;
        let k = self.resident.len() as f64;
        Some(self.last_update_s + (min_v - self.virtual_time).max(0.0) * k / capacity)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleAction {
    /// Node requested, now starting.
    Up,
    /// Starting node became active.
    Ready,
    /// Node stops taking new tasks.
    Down,
    /// Drained node released.
    Off,
    /// Scale-up requested with every elastic node already allocated.
    Saturated,
    /// Scale-down requested with no elastic node active.
    Floor,
}

impl ScaleAction {
    pub fn as_str(self) -> &'static str {
        match self {
            ScaleAction::Up => "SCALE_UP",
            ScaleAction::Ready => "READY",
            ScaleAction::Down => "SCALE_DOWN",
            ScaleAction::Off => "OFF",
            ScaleAction::Saturated => "SATURATED",
            ScaleAction::Floor => "FLOOR",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            ScaleAction::Up,
            ScaleAction::Ready,
            ScaleAction::Down,
            ScaleAction::Off,
            ScaleAction::Saturated,
            ScaleAction::Floor,
        ]
        .into_iter()
        .find(|a| a.as_str() == s)
    }
}

impl fmt::Display for ScaleAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScalingEvent {
    pub time: TimePoint,
    pub action: ScaleAction,
    pub node_id: Option<NodeId>,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpuSample {
    pub time: TimePoint,
    /// In `[0, 1]`.
    pub utilization: f64,
}

/// The node pool: base nodes first (ids `0..base`), then elastic nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterState {
    spec: ClusterSpec,
    nodes: Vec<NodeState>,
}

impl ClusterState {
    pub fn new(spec: ClusterSpec) -> Self {
        let nodes = (0..spec.max_nodes()).map(|id| NodeState::new(id, id < spec.base_nodes)).collect();
        ClusterState { spec, nodes }
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn allocated(&self) -> u32 {
        self.nodes.iter().filter(|n| n.status.is_allocated()).count() as u32
    }

    pub fn active(&self) -> u32 {
        self.nodes.iter().filter(|n| n.status == NodeStatus::Active).count() as u32
    }

    /// Starting nodes whose delay has elapsed by `now` become active.
    pub fn promote_ready(&mut self, now: TimePoint) -> Vec<ScalingEvent> {
        let mut events = Vec::new();
        for node in &mut self.nodes {
            if let NodeStatus::Starting { ready_at } = node.status {
                if ready_at <= now {
                    node.status = NodeStatus::Active;
                    node.last_update_s = to_secs(ready_at);
                    events.push(ScalingEvent {
                        time: ready_at,
                        action: ScaleAction::Ready,
                        node_id: Some(node.id),
                        reason: String::from("startup complete"),
                    });
                }
            }
        }
        events
    }

    fn next_ready(&self) -> Option<TimePoint> {
        self.nodes
            .iter()
            .filter_map(|n| match n.status {
                NodeStatus::Starting { ready_at } => Some(ready_at),
                _ => None,
            })
            .min()
    }
}

/// Applies one scaling decision at `now`. Requests are clamped to what the
/// pool can give; base nodes are never drained.
pub fn scaling_actuator(
    decision: Decision,
    state: &mut ClusterState,
    now: TimePoint,
    reason: &str,
) -> Vec<ScalingEvent> {
    let mut events = Vec::new();
    let event = |action, node_id| ScalingEvent {
        time: now,
        action,
        node_id,
        reason: String::from(reason),
    };
    match decision {
        Decision::Hold => {}
        Decision::ScaleUp(n) => {
            let ready_at = now + state.spec.startup_delay;
            let mut granted = 0;
            for node in state.nodes.iter_mut().filter(|n| n.status == NodeStatus::Off) {
                if granted == n {
                    break;
                }
                node.status = NodeStatus::Starting { ready_at };
                granted += 1;
                events.push(event(ScaleAction::Up, Some(node.id)));
            }
            if granted < n {
                events.push(event(ScaleAction::Saturated, None));
            }
        }
        Decision::ScaleDown(n) => {
            let mut released = 0;
            // newest elastic nodes go first
            for node in state.nodes.iter_mut().rev() {
                if released == n {
                    break;
                }
                if node.is_base || node.status != NodeStatus::Active {
                    continue;
                }
                released += 1;
                events.push(event(ScaleAction::Down, Some(node.id)));
                if node.resident.is_empty() {
                    node.status = NodeStatus::Off;
                    events.push(event(ScaleAction::Off, Some(node.id)));
                } else {
                    node.status = NodeStatus::Draining;
                }
            }
            if released < n {
                events.push(event(ScaleAction::Floor, None));
            }
        }
    }
    events
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimError {
    Spec(SpecError),
    /// Arrival `index` is earlier than its predecessor.
    ArrivalOutOfOrder { index: usize },
    /// Arrival `index` falls at or after the end of the workload duration.
    ArrivalBeyondHorizon { index: usize },
    /// Demand of arrival `index` is negative or not finite.
    InvalidDemand { index: usize },
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::Spec(e) => write!(f, "{e}"),
            SimError::ArrivalOutOfOrder { index } => {
                write!(f, "arrival {index} is earlier than the previous one")
            }
            SimError::ArrivalBeyondHorizon { index } => {
                write!(f, "arrival {index} is past the end of the workload")
            }
            SimError::InvalidDemand { index } => write!(f, "arrival {index} has an invalid demand"),
        }
    }
}

impl core::error::Error for SimError {}

impl From<SpecError> for SimError {
    fn from(e: SpecError) -> Self {
        SimError::Spec(e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub trace: Trace,
    pub cpu_samples: Vec<CpuSample>,
    pub scaling_log: Vec<ScalingEvent>,
    /// Seconds each node spent with at least one resident task.
    pub node_busy_s: Vec<f64>,
    /// Sum of all task demands, CPU-seconds.
    pub total_demand_s: f64,
}

fn to_secs(t: TimePoint) -> f64 {
    t.as_micros() as f64 / MICROS_PER_SEC as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EventKind {
    Completion(NodeId),
    Readiness,
    Tick,
    Arrival,
}

struct Sim {
    spec: ClusterSpec,
    state: ClusterState,
    scaler: Autoscaler,
    records: Vec<TaskRecord>,
    samples: Vec<CpuSample>,
    log: Vec<ScalingEvent>,
    timeline: Vec<(TimePoint, u32)>,
    in_flight: usize,
}

impl Sim {
    fn note_pool_size(&mut self, at: TimePoint) {
        let count = self.state.allocated();
        if self.timeline.last().map(|p| p.1) != Some(count) {
            self.timeline.push((at, count));
        }
    }

    fn next_completion(&self) -> Option<(f64, NodeId)> {
        let cap = self.spec.capacity;
        let mut best: Option<(f64, NodeId)> = None;
        for node in &self.state.nodes {
            if let Some(t) = node.next_completion_s(cap) {
                if best.is_none_or(|(bt, _)| t < bt) {
                    best = Some((t, node.id));
                }
            }
        }
        best
    }

    fn complete(&mut self, node_id: NodeId, now_s: f64) {
        let cap = self.spec.capacity;
        let node = &mut self.state.nodes[node_id as usize];
        node.advance(now_s, cap);
        let min_v = node.resident.iter().map(|r| r.finish_v).fold(f64::INFINITY, f64::min);
        if node.virtual_time < min_v {
            node.virtual_time = min_v;
        }
        let v = node.virtual_time;
        let finish = TimePoint::from_secs_f64(now_s);
        let mut i = 0;
        while i < node.resident.len() {
            if node.resident[i].finish_v <= v {
                let r = node.resident.swap_remove(i);
                let finish = finish.max(r.submit);
                self.records.push(TaskRecord {
                    task_id: r.task_id,
                    node_id,
                    submit_time: r.submit,
                    start_time: r.submit,
                    finish_time: finish,
                });
                self.in_flight -= 1;
            } else {
                i += 1;
            }
        }
        // keep admission order so ties resolve identically run to run
        node.resident.sort_by_key(|r| r.task_id);
        if node.status == NodeStatus::Draining && node.resident.is_empty() {
            node.status = NodeStatus::Off;
            self.log.push(ScalingEvent {
                time: finish,
                action: ScaleAction::Off,
                node_id: Some(node_id),
                reason: String::from("drained"),
            });
            self.note_pool_size(finish);
        }
    }

    fn dispatch(&mut self, arrival: ArrivalEvent, task_id: TaskId) {
        let now_s = to_secs(arrival.time);
        let cap = self.spec.capacity;
        let mut best: Option<(f64, usize)> = None;
        for (idx, node) in self.state.nodes.iter_mut().enumerate() {
            if node.status != NodeStatus::Active {
                continue;
            }
            node.advance(now_s, cap);
            let work = node.remaining_work();
            if best.is_none_or(|(w, _)| work < w) {
                best = Some((work, idx));
            }
        }
        // base nodes are never drained, so an active node always exists
        let (_, idx) = best.expect("at least one active node");
        let node = &mut self.state.nodes[idx];
        node.resident.push(Resident {
            task_id,
            submit: arrival.time,
            finish_v: node.virtual_time + arrival.demand_cpu_s,
        });
        self.in_flight += 1;
    }

    fn tick(&mut self, now: TimePoint) {
        let now_s = to_secs(now);
        let cap = self.spec.capacity;
        let period_s = self.spec.sample_period.as_secs_f64();
        let mut sum = 0.0;
        let mut max: f64 = 0.0;
        let mut active = 0u32;
        for node in &mut self.state.nodes {
            node.advance(now_s, cap);
            if node.status == NodeStatus::Active {
                let u = (node.busy_in_period_s / period_s).clamp(0.0, 1.0);
                sum += u;
                max = max.max(u);
                active += 1;
            }
            node.busy_in_period_s = 0.0;
        }
        let utilization = match self.spec.utilization {
            UtilizationMode::ClusterMean => sum / f64::from(active.max(1)),
            UtilizationMode::NodeMax => max,
        };
        self.samples.push(CpuSample { time: now, utilization });

        let verdict = self.scaler.observe(now, utilization);
        if verdict.decision != Decision::Hold {
            let reason = format!("signal={:.4}", verdict.signal);
            let events = scaling_actuator(verdict.decision, &mut self.state, now, &reason);
            self.log.extend(events);
            self.note_pool_size(now);
        }
    }
}

/// Runs the workload through the cluster under `scaler`.
///
/// Arrivals must be in non-decreasing time order and fall before
/// `duration`, the workload length.
/// The run continues past it until all tasks finish; the trace horizon is
/// `[0, max(duration, last finish))`.
pub fn simulate<I>(
    arrivals: I,
    duration: Duration,
    cluster: &ClusterSpec,
    scaler: &ScalerPolicy,
) -> Result<SimOutput, SimError>
where
    I: IntoIterator<Item = ArrivalEvent>,
{
    cluster.validate()?;
    if duration.is_zero() {
        return Err(SpecError { field: "workload.duration", reason: "must be positive" }.into());
    }
    let mut sim = Sim {
        spec: *cluster,
        state: ClusterState::new(*cluster),
        scaler: Autoscaler::new(*scaler, cluster.sample_period)?,
        records: Vec::new(),
        samples: Vec::new(),
        log: Vec::new(),
        timeline: alloc::vec![(TimePoint::ZERO, cluster.base_nodes)],
        in_flight: 0,
    };

    let end = TimePoint::ZERO + duration;
    let period_us = cluster.sample_period.as_micros();
    let mut tick_k: u64 = 1;
    let mut arrivals = arrivals.into_iter().peekable();
    let mut arrival_idx = 0usize;
    let mut last_arrival: Option<TimePoint> = None;
    let mut total_demand_s = 0.0;

    loop {
        let next_arrival = match arrivals.peek() {
            Some(a) => {
                if a.time >= end {
                    return Err(SimError::ArrivalBeyondHorizon { index: arrival_idx });
                }
                if last_arrival.is_some_and(|p| a.time < p) {
                    return Err(SimError::ArrivalOutOfOrder { index: arrival_idx });
                }
                if !(a.demand_cpu_s >= 0.0 && a.demand_cpu_s.is_finite()) {
                    return Err(SimError::InvalidDemand { index: arrival_idx });
                }
                Some(a.time)
            }
            None => None,
        };
        let tick = TimePoint::from_micros(tick_k * period_us);
        if next_arrival.is_none() && sim.in_flight == 0 && tick > end {
            break;
        }

        let mut next: (f64, EventKind) = (to_secs(tick), EventKind::Tick);
        let mut consider = |t: f64, kind: EventKind| {
            if (t, kind) < next {
                next = (t, kind);
            }
        };
        if let Some((t, node)) = sim.next_completion() {
            consider(t, EventKind::Completion(node));
        }
        if let Some(t) = sim.state.next_ready() {
            consider(to_secs(t), EventKind::Readiness);
        }
        if let Some(t) = next_arrival {
            consider(to_secs(t), EventKind::Arrival);
        }

        match next.1 {
            EventKind::Completion(node) => sim.complete(node, next.0),
            EventKind::Readiness => {
                let now = sim.state.next_ready().expect("readiness event pending");
                let events = sim.state.promote_ready(now);
                sim.log.extend(events);
            }
            EventKind::Tick => {
                sim.tick(tick);
                tick_k += 1;
            }
            EventKind::Arrival => {
                let a = arrivals.next().expect("peeked arrival");
                total_demand_s += a.demand_cpu_s;
                sim.dispatch(a, arrival_idx as TaskId);
                last_arrival = Some(a.time);
                arrival_idx += 1;
            }
        }
    }

    let last_finish = sim.records.iter().map(|r| r.finish_time).max().unwrap_or(TimePoint::ZERO);
    let horizon_end = end.max(last_finish);
    let horizon = Interval::new(TimePoint::ZERO, horizon_end)
        .expect("positive duration gives a non-empty horizon");
    let timeline: Vec<(TimePoint, u32)> =
        sim.timeline.into_iter().filter(|p| p.0 < horizon_end).collect();
    let trace = Trace::new(sim.records, horizon, NodeTimeline::from_points(timeline))
        .expect("simulator emits a consistent trace");

    Ok(SimOutput {
        trace,
        cpu_samples: sim.samples,
        scaling_log: sim.log,
        node_busy_s: sim.state.nodes.iter().map(|n| n.busy_total_s).collect(),
        total_demand_s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scaler::Forecaster;
    use alloc::vec;

    fn arrival(us: u64, demand: f64) -> ArrivalEvent {
        ArrivalEvent { time: TimePoint::from_micros(us), demand_cpu_s: demand }
    }

    fn single_node() -> ClusterSpec {
        ClusterSpec { base_nodes: 1, elastic_nodes_max: 0, ..ClusterSpec::default() }
    }

    #[test]
    fn unloaded_task_runs_at_full_speed() {
        let out = simulate(
            vec![arrival(0, 0.05)],
            Duration::from_secs(1),
            &single_node(),
            &ScalerPolicy::reactive(),
        )
        .unwrap();
        let rec = out.trace.tasks()[0];
        assert_eq!(rec.exec_time(), Duration::from_millis(50));
    }

    #[test]
    fn two_simultaneous_tasks_share_capacity() {
        // equal demands d arriving together on one node: both finish at 2d
        let out = simulate(
            vec![arrival(0, 0.1), arrival(0, 0.1)],
            Duration::from_secs(1),
            &single_node(),
            &ScalerPolicy::reactive(),
        )
        .unwrap();
        let finishes: Vec<u64> = out.trace.tasks().iter().map(|r| r.finish_time.as_micros()).collect();
        assert_eq!(finishes, vec![200_000, 200_000]);
        let sla = crate::sla::SlaPolicy::new(Duration::from_millis(100)).unwrap();
        let summary = crate::sla::extract_violations(&out.trace, &sla).unwrap();
        assert_eq!(summary.num_violations, 2);
    }

    #[test]
    fn staggered_processor_sharing_closed_form() {
        // A (0.3) at 0, B (0.1) at 0.1: A alone for 0.1 s (0.2 left), then
        // both at half speed; B done after 0.2 s at t=0.3; A then has 0.1
        // left at full speed and ends at t=0.4.
        let out = simulate(
            vec![arrival(0, 0.3), arrival(100_000, 0.1)],
            Duration::from_secs(1),
            &single_node(),
            &ScalerPolicy::reactive(),
        )
        .unwrap();
        let by_id: Vec<(u64, u64)> =
            out.trace.tasks().iter().map(|r| (r.task_id, r.finish_time.as_micros())).collect();
        assert_eq!(by_id, vec![(1, 300_000), (0, 400_000)]);
    }

    #[test]
    fn zero_arrivals() {
        let out = simulate(
            Vec::new(),
            Duration::from_secs(20),
            &ClusterSpec::default(),
            &ScalerPolicy::reactive(),
        )
        .unwrap();
        assert!(out.trace.is_empty());
        assert_eq!(out.cpu_samples.len(), 20);
        assert!(out.cpu_samples.iter().all(|s| s.utilization == 0.0));
        assert_eq!(out.trace.nodes().points(), &[(TimePoint::ZERO, 5)]);
        // scale-down requests on a base-only pool are floor no-ops
        assert!(out.scaling_log.iter().all(|e| e.action == ScaleAction::Floor));
    }

    #[test]
    fn least_work_dispatch_with_id_tiebreak() {
        let cluster = ClusterSpec { base_nodes: 3, elastic_nodes_max: 0, ..ClusterSpec::default() };
        let out = simulate(
            vec![arrival(0, 1.0), arrival(10, 0.5), arrival(20, 0.2), arrival(30, 0.1)],
            Duration::from_secs(5),
            &cluster,
            &ScalerPolicy::reactive(),
        )
        .unwrap();
        let mut by_id: Vec<(u64, u32)> =
            out.trace.tasks().iter().map(|r| (r.task_id, r.node_id)).collect();
        by_id.sort();
        // 0 -> node0, 1 -> node1, 2 -> node2, 3 -> node2 (least remaining)
        assert_eq!(by_id, vec![(0, 0), (1, 1), (2, 2), (3, 2)]);
    }

    #[test]
    fn arrival_validation() {
        let c = single_node();
        let p = ScalerPolicy::reactive();
        assert_eq!(
            simulate(vec![arrival(5, 0.1), arrival(4, 0.1)], Duration::from_secs(1), &c, &p),
            Err(SimError::ArrivalOutOfOrder { index: 1 })
        );
        assert_eq!(
            simulate(vec![arrival(1_000_000, 0.1)], Duration::from_secs(1), &c, &p),
            Err(SimError::ArrivalBeyondHorizon { index: 0 })
        );
        assert!(matches!(
            simulate(Vec::new(), Duration::from_secs(1), &ClusterSpec { base_nodes: 0, ..c }, &p),
            Err(SimError::Spec(SpecError { field: "cluster.base_nodes", .. }))
        ));
    }

    #[test]
    fn actuator_startup_delay() {
        let mut state = ClusterState::new(ClusterSpec::default());
        let t100 = TimePoint::from_micros(100 * MICROS_PER_SEC);
        let ev = scaling_actuator(Decision::ScaleUp(1), &mut state, t100, "test");
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].node_id, Some(5));
        assert_eq!(state.allocated(), 6);
        assert_eq!(state.active(), 5);
        assert!(state.promote_ready(TimePoint::from_micros(104_999_999)).is_empty());
        let ready = state.promote_ready(TimePoint::from_micros(105 * MICROS_PER_SEC));
        assert_eq!(ready[0].time, TimePoint::from_micros(105 * MICROS_PER_SEC));
        assert_eq!(state.active(), 6);
    }

    #[test]
    fn actuator_floor_and_saturation() {
        let spec = ClusterSpec { base_nodes: 2, elastic_nodes_max: 1, ..ClusterSpec::default() };
        let mut state = ClusterState::new(spec);
        let t = TimePoint::ZERO;
        let ev = scaling_actuator(Decision::ScaleDown(1), &mut state, t, "x");
        assert_eq!(ev[0].action, ScaleAction::Floor);
        assert_eq!(state.allocated(), 2);
        let ev = scaling_actuator(Decision::ScaleUp(3), &mut state, t, "x");
        let actions: Vec<_> = ev.iter().map(|e| e.action).collect();
        assert_eq!(actions, vec![ScaleAction::Up, ScaleAction::Saturated]);
        assert_eq!(state.allocated(), 3);
    }

    #[test]
    fn interleaved_scaling_ledger() {
        // scripted ledger: (time s, decision) -> expected (allocated, active) after promotion
        let spec = ClusterSpec::default();
        let mut state = ClusterState::new(spec);
        let s = |x: u64| TimePoint::from_micros(x * MICROS_PER_SEC);
        let script: [(u64, Decision, u32, u32); 6] = [
            (10, Decision::ScaleUp(2), 7, 5),
            (12, Decision::ScaleDown(1), 7, 5), // starting nodes are not drained
            (15, Decision::Hold, 7, 7),
            (20, Decision::ScaleDown(1), 6, 6),
            (21, Decision::ScaleUp(1), 7, 6),
            (26, Decision::ScaleDown(3), 5, 5),
        ];
        for (t, d, alloc_n, active_n) in script {
            state.promote_ready(s(t));
            scaling_actuator(d, &mut state, s(t), "script");
            state.promote_ready(s(t));
            assert_eq!((state.allocated(), state.active()), (alloc_n, active_n), "at {t}s");
        }
    }

    #[test]
    fn draining_node_finishes_work_then_turns_off() {
        let mut state = ClusterState::new(ClusterSpec {
            base_nodes: 1,
            elastic_nodes_max: 1,
            ..ClusterSpec::default()
        });
        scaling_actuator(Decision::ScaleUp(1), &mut state, TimePoint::ZERO, "x");
        state.promote_ready(TimePoint::from_micros(5 * MICROS_PER_SEC));
        state.nodes[1].resident.push(Resident {
            task_id: 0,
            submit: TimePoint::ZERO,
            finish_v: 1.0,
        });
        let ev = scaling_actuator(Decision::ScaleDown(1), &mut state, TimePoint::ZERO, "x");
        assert_eq!(ev.len(), 1);
        assert_eq!(state.nodes[1].status, NodeStatus::Draining);
        assert_eq!(state.allocated(), 2);
    }

    #[test]
    fn reactive_scales_up_under_overload() {
        // 2 CPU-s/s offered to a single base node for 60 s
        let arrivals: Vec<_> = (0..600).map(|i| arrival(i * 100_000, 0.2)).collect();
        let cluster = ClusterSpec { base_nodes: 1, elastic_nodes_max: 3, ..ClusterSpec::default() };
        let out = simulate(arrivals, Duration::from_secs(60), &cluster, &ScalerPolicy::reactive())
            .unwrap();
        let ups: Vec<_> =
            out.scaling_log.iter().filter(|e| e.action == ScaleAction::Up).map(|e| e.time).collect();
        assert_eq!(ups[0], TimePoint::from_micros(MICROS_PER_SEC));
        assert_eq!(ups[1], TimePoint::from_micros(31 * MICROS_PER_SEC));
        let ready = out.scaling_log.iter().find(|e| e.action == ScaleAction::Ready).unwrap();
        assert_eq!(ready.time, TimePoint::from_micros(6 * MICROS_PER_SEC));
        assert!(out.trace.nodes().max_count() >= 3);
    }

    #[test]
    fn work_is_conserved() {
        let arrivals: Vec<_> =
            (0..2000u64).map(|i| arrival(i * 37_003, 0.01 + (i % 17) as f64 * 0.013)).collect();
        let out = simulate(
            arrivals,
            Duration::from_secs(80),
            &ClusterSpec::default(),
            &ScalerPolicy::proactive(Forecaster::Overestimator { bias: 0.15 }),
        )
        .unwrap();
        let served: f64 = out.node_busy_s.iter().sum::<f64>();
        assert!((served - out.total_demand_s).abs() <= 1e-6 * out.total_demand_s);
        assert_eq!(out.trace.len(), 2000);
    }
}
