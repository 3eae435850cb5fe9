//! Latency metrics for SLA-bound distributed services.
//!
//! Besides the usual latency statistics (mean, median, spread, skewness,
//! kurtosis, tail percentile) this crate computes five violation-time
//! metrics that treat SLA violations the way reliability engineering treats
//! faults: mean clean time between violations, mean violation time, the
//! clean-time fraction, and two bounded transforms of the first two.
//!
//! It also contains a deterministic discrete-event simulator of an
//! autoscaled node pool that produces traces to evaluate those metrics on.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;

pub mod conventional;
pub mod interval;
pub mod report;
pub mod scaler;
pub mod sim;
pub mod sla;
pub mod time;
pub mod trace;
pub mod workload;

pub use interval::{complement, interval_union, Interval, IntervalError, IntervalSet};
pub use time::{Duration, TimePoint};
pub use trace::{NodeId, NodeTimeline, TaskId, TaskRecord, Trace, TraceError};

/// A configuration value that failed validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpecError {
    /// Dotted config path, e.g. `scaler.up_threshold`.
    pub field: &'static str,
    pub reason: &'static str,
}

impl core::fmt::Display for SpecError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

impl core::error::Error for SpecError {}
