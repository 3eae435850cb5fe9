//! One self-describing metrics report per trace.

use crate::conventional::{conventional_report, ConventionalReport};
use crate::sla::{sla_report, CountMode, SlaError, SlaPolicy, SlaReport, SpanRule};
use crate::time::Duration;
use crate::trace::Trace;

pub const PERCENTILE_RULE: &str = "nearest-rank";
pub const KURTOSIS_CONVENTION: &str = "raw";
pub const MOMENT_CONVENTION: &str = "population";

/// Every interpretation choice that changes metric values. Two reports are
/// only comparable when these agree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conventions {
    pub percentile: &'static str,
    pub kurtosis: &'static str,
    pub moments: &'static str,
    pub threshold: Duration,
    pub span_rule: SpanRule,
    pub count_mode: CountMode,
}

impl Conventions {
    pub fn for_policy(policy: &SlaPolicy) -> Self {
        Conventions {
            percentile: PERCENTILE_RULE,
            kurtosis: KURTOSIS_CONVENTION,
            moments: MOMENT_CONVENTION,
            threshold: policy.threshold(),
            span_rule: policy.span_rule,
            count_mode: policy.count_mode,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResourceStats {
    pub tasks: u64,
    pub horizon_s: f64,
    /// Integral of the provisioned node count over the horizon.
    pub node_seconds: f64,
    pub num_violations: u64,
    pub violation_time_s: f64,
    pub clean_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub conventions: Conventions,
    pub conventional: ConventionalReport,
    pub sla: SlaReport,
    pub resources: ResourceStats,
}

/// Conventional statistics, the five violation metrics and resource usage
/// for `trace` under `policy`.
pub fn analyze(trace: &Trace, policy: &SlaPolicy) -> Result<MetricsReport, SlaError> {
    let sla = sla_report(trace, policy)?;
    let resources = ResourceStats {
        tasks: trace.len() as u64,
        horizon_s: trace.horizon().measure().as_secs_f64(),
        node_seconds: trace.node_seconds(),
        num_violations: sla.summary.num_violations,
        violation_time_s: sla.summary.violation_time().as_secs_f64(),
        clean_time_s: sla.summary.clean_time().as_secs_f64(),
    };
    Ok(MetricsReport {
        conventions: Conventions::for_policy(policy),
        conventional: conventional_report(trace),
        sla,
        resources,
    })
}
