//! Line-oriented trace files.
//!
//! ```text
//! #latemetrics-trace v1
//! #horizon 0,21600000000
//! task_id,node_id,submit_us,start_us,finish_us
//! ...
//! #nodes
//! time_us,count
//! ...
//! ```
//!
//! The `#horizon` line is optional on input; without it the horizon runs
//! from the first node change-point (or 0) to the last finish time.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use latemetrics_core::{Interval, NodeTimeline, TaskRecord, TimePoint, Trace, TraceError};
use thiserror::Error;

pub const TRACE_HEADER: &str = "#latemetrics-trace v1";
const HORIZON_TAG: &str = "#horizon ";
const NODES_TAG: &str = "#nodes";

#[derive(Debug, Error)]
pub enum TraceFileError {
    #[error("line {line}: {field}: {message}")]
    Malformed { line: usize, field: &'static str, message: String },
    #[error("{0}")]
    Invalid(#[from] TraceError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

fn malformed(line: usize, field: &'static str, message: impl Into<String>) -> TraceFileError {
    TraceFileError::Malformed { line, field, message: message.into() }
}

pub fn render_trace(trace: &Trace) -> String {
    let mut out = String::with_capacity(48 * (trace.len() + 4));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    let h = trace.horizon();
    let _ = writeln!(out, "{HORIZON_TAG}{},{}", h.start().as_micros(), h.end().as_micros());
    for t in trace.tasks() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            t.task_id,
            t.node_id,
            t.submit_time.as_micros(),
            t.start_time.as_micros(),
            t.finish_time.as_micros()
        );
    }
    out.push_str(NODES_TAG);
    out.push('\n');
    for (time, count) in trace.nodes().points() {
        let _ = writeln!(out, "{},{}", time.as_micros(), count);
    }
    out
}

fn field<T: FromStr>(
    parts: &mut std::str::Split<'_, char>,
    line: usize,
    name: &'static str,
) -> Result<T, TraceFileError> {
    let raw = parts.next().ok_or_else(|| malformed(line, name, "missing"))?;
    raw.trim().parse().map_err(|_| malformed(line, name, format!("cannot parse {raw:?}")))
}

fn no_extra(parts: &mut std::str::Split<'_, char>, line: usize) -> Result<(), TraceFileError> {
    match parts.next() {
        Some(_) => Err(malformed(line, "record", "too many fields")),
        None => Ok(()),
    }
}

pub fn parse_trace(text: &str) -> Result<Trace, TraceFileError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l.trim_end() == TRACE_HEADER => {}
        _ => return Err(malformed(1, "header", format!("expected {TRACE_HEADER:?}"))),
    }

    let mut horizon: Option<(u64, u64, usize)> = None;
    let mut tasks = Vec::new();
    let mut points = Vec::new();
    let mut in_nodes = false;
    for (n, raw) in lines {
        let l = raw.trim();
        if l.is_empty() {
            continue;
        }
        if let Some(rest) = l.strip_prefix(HORIZON_TAG) {
            if in_nodes || !tasks.is_empty() || horizon.is_some() {
                return Err(malformed(n, "horizon", "must precede all records"));
            }
            let mut parts = rest.split(',');
            let start = field(&mut parts, n, "horizon_start_us")?;
            let end = field(&mut parts, n, "horizon_end_us")?;
            no_extra(&mut parts, n)?;
            horizon = Some((start, end, n));
            continue;
        }
        if l == NODES_TAG {
            if in_nodes {
                return Err(malformed(n, "section", "duplicate #nodes section"));
            }
            in_nodes = true;
            continue;
        }
        if l.starts_with('#') {
            return Err(malformed(n, "section", format!("unknown directive {l:?}")));
        }
        let mut parts = l.split(',');
        if in_nodes {
            let time: u64 = field(&mut parts, n, "time_us")?;
            let count: u32 = field(&mut parts, n, "count")?;
            no_extra(&mut parts, n)?;
            if count == 0 {
                return Err(malformed(n, "count", "node count must be at least 1"));
            }
            if let Some(&(prev, _)) = points.last() {
                if TimePoint::from_micros(time) <= prev {
                    return Err(malformed(n, "time_us", "change-points must increase"));
                }
            }
            points.push((TimePoint::from_micros(time), count));
        } else {
            let task_id = field(&mut parts, n, "task_id")?;
            let node_id = field(&mut parts, n, "node_id")?;
            let submit: u64 = field(&mut parts, n, "submit_us")?;
            let start: u64 = field(&mut parts, n, "start_us")?;
            let finish: u64 = field(&mut parts, n, "finish_us")?;
            no_extra(&mut parts, n)?;
            if start < submit {
                return Err(malformed(n, "start_us", "start precedes submit"));
            }
            if finish < start {
                return Err(malformed(n, "finish_us", "finish precedes start"));
            }
            let rec = TaskRecord::new(
                task_id,
                node_id,
                TimePoint::from_micros(submit),
                TimePoint::from_micros(start),
                TimePoint::from_micros(finish),
            )?;
            tasks.push(rec);
        }
    }

    if points.is_empty() {
        return Err(malformed(text.lines().count().max(1), "nodes", "missing #nodes section"));
    }
    let horizon = match horizon {
        Some((s, e, n)) => {
            Interval::from_micros(s, e).map_err(|_| malformed(n, "horizon", "start must precede end"))?
        }
        None => {
            let start = points[0].0;
            let end = tasks.iter().map(|t: &TaskRecord| t.finish_time).max().unwrap_or(start);
            Interval::new(start, end).map_err(|_| malformed(1, "horizon", "trace spans no time"))?
        }
    };
    Ok(Trace::new(tasks, horizon, NodeTimeline::from_points(points))?)
}

pub fn write_trace(trace: &Trace, path: &Path) -> Result<(), TraceFileError> {
    fs::write(path, render_trace(trace))
        .map_err(|source| TraceFileError::Io { path: path.display().to_string(), source })
}

pub fn read_trace(path: &Path) -> Result<Trace, TraceFileError> {
    let text = fs::read_to_string(path)
        .map_err(|source| TraceFileError::Io { path: path.display().to_string(), source })?;
    parse_trace(&text)
}
