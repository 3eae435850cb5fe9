//! Scaling log and CPU sample files.

use std::fmt::Write as _;

use latemetrics_core::sim::{CpuSample, ScaleAction, ScalingEvent};
use latemetrics_core::TimePoint;

pub const SCALING_HEADER: &str = "#latemetrics-scaling v1";
pub const CPU_HEADER: &str = "#latemetrics-cpu v1";

/// `time_us,action,node_id,reason`; `node_id` is empty when the event
/// concerns no particular node.
pub fn render_scaling_log(events: &[ScalingEvent]) -> String {
    let mut out = String::from(SCALING_HEADER);
    out.push('\n');
    for e in events {
        let node = e.node_id.map(|n| n.to_string()).unwrap_or_default();
        let reason = e.reason.replace([',', '\n'], ";");
        let _ = writeln!(out, "{},{},{},{}", e.time.as_micros(), e.action.as_str(), node, reason);
    }
    out
}

pub fn parse_scaling_log(text: &str) -> Result<Vec<ScalingEvent>, String> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, SCALING_HEADER)) => {}
        _ => return Err(format!("line 1: header: expected {SCALING_HEADER:?}")),
    }
    let mut out = Vec::new();
    for (i, l) in lines {
        let n = i + 1;
        if l.trim().is_empty() {
            continue;
        }
        let mut parts = l.splitn(4, ',');
        let mut next = |name: &str| parts.next().ok_or(format!("line {n}: {name}: missing"));
        let time = next("time_us")?;
        let time: u64 = time.parse().map_err(|_| format!("line {n}: time_us: cannot parse {time:?}"))?;
        let action = next("action")?;
        let action =
            ScaleAction::parse(action).ok_or(format!("line {n}: action: unknown {action:?}"))?;
        let node = next("node_id")?;
        let node_id = if node.is_empty() {
            None
        } else {
            Some(node.parse().map_err(|_| format!("line {n}: node_id: cannot parse {node:?}"))?)
        };
        let reason = next("reason")?.to_string();
        out.push(ScalingEvent { time: TimePoint::from_micros(time), action, node_id, reason });
    }
    Ok(out)
}

/// `time_us,utilization` with shortest round-trip float formatting.
pub fn render_cpu_samples(samples: &[CpuSample]) -> String {
    let mut out = String::from(CPU_HEADER);
    out.push('\n');
    for s in samples {
        let _ = writeln!(out, "{},{}", s.time.as_micros(), s.utilization);
    }
    out
}
