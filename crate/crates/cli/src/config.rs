//! Run configuration.
//!
//! ```toml
//! seed = 7
//!
//! [workload]
//! duration = "6h"
//! base_rate = 0.766
//! clock_offset = "17h"
//! demand = { kind = "lognormal", median = 0.12, sigma = 0.5, cap = 5.0 }
//!
//! [cluster]
//! base_nodes = 5
//!
//! [scaler]
//! kind = "proactive"
//! forecaster = "overestimator"
//! bias = 0.15
//!
//! [sla]
//! threshold = "100ms"
//! ```
//!
//! Every key is optional; omitted keys take the library defaults.

use std::fmt;

use latemetrics_core::scaler::{Forecaster, ScalerKind, ScalerPolicy};
use latemetrics_core::sim::{ClusterSpec, UtilizationMode};
use latemetrics_core::sla::{CountMode, SlaPolicy, SpanRule};
use latemetrics_core::workload::{DemandDist, DiurnalProfile, LogNormalDemand, Surge, WorkloadSpec};
use latemetrics_core::{Duration, SpecError};
use serde::Deserialize;

pub const SEED_ENV: &str = "LATEMETRICS_SEED";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

impl From<SpecError> for ConfigError {
    fn from(e: SpecError) -> Self {
        ConfigError { field: e.field.to_string(), message: e.reason.to_string() }
    }
}

fn bad(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { field: field.to_string(), message: message.into() }
}

/// Parses `"100ms"`, `"5s"`, `"6h"`, `"1h 30m"` and similar.
pub fn parse_duration(s: &str) -> Result<Duration, String> {
    let d = humantime::parse_duration(s.trim()).map_err(|e| format!("{s:?}: {e}"))?;
    if d.subsec_nanos() % 1000 != 0 {
        return Err(format!("{s:?}: finer than one microsecond"));
    }
    u64::try_from(d.as_micros())
        .map(Duration::from_micros)
        .map_err(|_| format!("{s:?}: too long"))
}

fn duration_field(field: &str, value: &Option<String>, default: Duration) -> Result<Duration, ConfigError> {
    match value {
        Some(s) => parse_duration(s).map_err(|e| bad(field, e)),
        None => Ok(default),
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    #[serde(default)]
    workload: RawWorkload,
    #[serde(default)]
    cluster: RawCluster,
    #[serde(default)]
    scaler: RawScaler,
    #[serde(default)]
    sla: RawSla,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWorkload {
    duration: Option<String>,
    base_rate: Option<f64>,
    clock_offset: Option<String>,
    /// `[[hour, multiplier], ...]` from hour 0 to hour 24.
    profile: Option<Vec<(f64, f64)>>,
    demand: Option<RawDemand>,
    #[serde(default)]
    surge: Vec<RawSurge>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLogNormal {
    #[serde(default = "one")]
    weight: f64,
    median: f64,
    sigma: f64,
    cap: f64,
}

fn one() -> f64 {
    1.0
}

impl From<RawLogNormal> for LogNormalDemand {
    fn from(r: RawLogNormal) -> Self {
        LogNormalDemand { median_s: r.median, sigma: r.sigma, cap_s: r.cap }
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum RawDemand {
    Constant { value: f64 },
    Exponential { mean: f64 },
    Lognormal { median: f64, sigma: f64, cap: f64 },
    Mixture { components: Vec<RawLogNormal> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSurge {
    start: String,
    length: String,
    multiplier: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCluster {
    base_nodes: Option<u32>,
    elastic_nodes_max: Option<u32>,
    capacity: Option<f64>,
    startup_delay: Option<String>,
    sample_period: Option<String>,
    utilization: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScaler {
    kind: Option<String>,
    forecaster: Option<String>,
    alpha: Option<f64>,
    bias: Option<f64>,
    up_threshold: Option<f64>,
    down_threshold: Option<f64>,
    history_len: Option<usize>,
    lead_time: Option<String>,
    step: Option<u32>,
    cooldown: Option<String>,
    scale_down_on_forecast: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSla {
    threshold: Option<String>,
    span_rule: Option<String>,
    count_mode: Option<String>,
    warmup: Option<String>,
}

/// A validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub workload: WorkloadSpec,
    pub cluster: ClusterSpec,
    pub scaler: ScalerPolicy,
    pub sla: SlaPolicy,
    pub warmup: Duration,
}

impl RunConfig {
    /// Parses and validates `text`. `seed_override` (normally the value of
    /// `LATEMETRICS_SEED`) replaces the configured seed when present.
    pub fn parse(text: &str, seed_override: Option<&str>) -> Result<RunConfig, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            match e.span() {
                Some(span) => {
                    let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
                    bad(&format!("line {line}"), msg)
                }
                None => bad("config", msg),
            }
        })?;
        let mut cfg = raw.resolve()?;
        if let Some(s) = seed_override {
            cfg.seed = s.trim().parse().map_err(|_| bad(SEED_ENV, format!("not a u64: {s:?}")))?;
        }
        cfg.workload.seed = cfg.seed;
        Ok(cfg)
    }
}

impl RawConfig {
    fn resolve(self) -> Result<RunConfig, ConfigError> {
        let seed = self.seed.unwrap_or(0);
        let workload = self.workload.resolve(seed)?;
        let cluster = self.cluster.resolve()?;
        let scaler = self.scaler.resolve()?;
        let (sla, warmup) = self.sla.resolve()?;
        if warmup >= workload.duration {
            return Err(bad("sla.warmup", "must be shorter than workload.duration"));
        }
        Ok(RunConfig { seed, workload, cluster, scaler, sla, warmup })
    }
}

impl RawWorkload {
    fn resolve(self, seed: u64) -> Result<WorkloadSpec, ConfigError> {
        let d = WorkloadSpec::default();
        let profile = match self.profile {
            None => d.profile,
            Some(knots) => {
                let mut out = Vec::with_capacity(knots.len());
                for (hour, mult) in knots {
                    if !(hour >= 0.0 && hour.is_finite()) {
                        return Err(bad("workload.profile", format!("bad hour {hour}")));
                    }
                    out.push((Duration::from_secs_f64(hour * 3600.0), mult));
                }
                DiurnalProfile::new(out)?
            }
        };
        let demand = match self.demand {
            None => d.demand,
            Some(RawDemand::Constant { value }) => DemandDist::Constant(value),
            Some(RawDemand::Exponential { mean }) => DemandDist::Exponential { mean_s: mean },
            Some(RawDemand::Lognormal { median, sigma, cap }) => {
                DemandDist::LogNormal(LogNormalDemand { median_s: median, sigma, cap_s: cap })
            }
            Some(RawDemand::Mixture { components }) => {
                DemandDist::Mixture(components.into_iter().map(|c| (c.weight, c.into())).collect())
            }
        };
        let mut surges = Vec::with_capacity(self.surge.len());
        for s in &self.surge {
            surges.push(Surge {
                start: parse_duration(&s.start).map_err(|e| bad("workload.surge.start", e))?,
                length: parse_duration(&s.length).map_err(|e| bad("workload.surge.length", e))?,
                multiplier: s.multiplier,
            });
        }
        let spec = WorkloadSpec {
            duration: duration_field("workload.duration", &self.duration, d.duration)?,
            base_rate: self.base_rate.unwrap_or(d.base_rate),
            profile,
            clock_offset: duration_field("workload.clock_offset", &self.clock_offset, d.clock_offset)?,
            demand,
            surges,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl RawCluster {
    fn resolve(self) -> Result<ClusterSpec, ConfigError> {
        let d = ClusterSpec::default();
        let utilization = match self.utilization.as_deref() {
            None => d.utilization,
            Some("mean") => UtilizationMode::ClusterMean,
            Some("max") => UtilizationMode::NodeMax,
            Some(other) => {
                return Err(bad("cluster.utilization", format!("expected mean|max, got {other:?}")))
            }
        };
        let spec = ClusterSpec {
            base_nodes: self.base_nodes.unwrap_or(d.base_nodes),
            elastic_nodes_max: self.elastic_nodes_max.unwrap_or(d.elastic_nodes_max),
            capacity: self.capacity.unwrap_or(d.capacity),
            startup_delay: duration_field("cluster.startup_delay", &self.startup_delay, d.startup_delay)?,
            sample_period: duration_field("cluster.sample_period", &self.sample_period, d.sample_period)?,
            utilization,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl RawScaler {
    fn resolve(self) -> Result<ScalerPolicy, ConfigError> {
        let forecaster = match self.forecaster.as_deref() {
            None | Some("linear-trend") => Forecaster::LinearTrend,
            Some("last-value") => Forecaster::LastValue,
            Some("ewma") => Forecaster::Ewma { alpha: self.alpha.unwrap_or(0.5) },
            Some("overestimator") => Forecaster::Overestimator { bias: self.bias.unwrap_or(0.15) },
            Some(other) => {
                return Err(bad(
                    "scaler.forecaster",
                    format!("expected last-value|linear-trend|ewma|overestimator, got {other:?}"),
                ))
            }
        };
        let mut p = match self.kind.as_deref() {
            None | Some("reactive") => {
                if self.forecaster.is_some() {
                    return Err(bad("scaler.forecaster", "only valid with kind = \"proactive\""));
                }
                ScalerPolicy::reactive()
            }
            Some("proactive") => ScalerPolicy::proactive(forecaster),
            Some(other) => {
                return Err(bad("scaler.kind", format!("expected reactive|proactive, got {other:?}")))
            }
        };
        if let Some(v) = self.up_threshold {
            p.up_threshold = v;
        }
        if let Some(v) = self.down_threshold {
            p.down_threshold = v;
        }
        if let Some(v) = self.history_len {
            p.history_len = v;
        }
        p.lead_time = duration_field("scaler.lead_time", &self.lead_time, p.lead_time)?;
        if let Some(v) = self.step {
            p.step = v;
        }
        p.cooldown = duration_field("scaler.cooldown", &self.cooldown, p.cooldown)?;
        if let Some(v) = self.scale_down_on_forecast {
            p.scale_down_on_forecast = v;
        }
        p.validate()?;
        Ok(p)
    }
}

impl RawSla {
    fn resolve(self) -> Result<(SlaPolicy, Duration), ConfigError> {
        let threshold = duration_field("sla.threshold", &self.threshold, Duration::from_millis(100))?;
        let mut policy = SlaPolicy::new(threshold).map_err(|e| bad("sla.threshold", e.to_string()))?;
        if let Some(s) = &self.span_rule {
            policy = policy.with_span_rule(
                SpanRule::parse(s).ok_or_else(|| bad("sla.span_rule", format!("expected excess|full, got {s:?}")))?,
            );
        }
        if let Some(s) = &self.count_mode {
            policy = policy.with_count_mode(
                CountMode::parse(s)
                    .ok_or_else(|| bad("sla.count_mode", format!("expected tasks|spans, got {s:?}")))?,
            );
        }
        let warmup = duration_field("sla.warmup", &self.warmup, Duration::ZERO)?;
        Ok((policy, warmup))
    }
}

/// Human-readable name of the scaling policy, e.g. `proactive/overestimator(0.15)`.
pub fn policy_label(p: &ScalerPolicy) -> String {
    match p.kind {
        ScalerKind::Reactive => "reactive".to_string(),
        ScalerKind::Proactive(f) => format!("proactive/{}", forecaster_label(&f)),
    }
}

pub fn forecaster_label(f: &Forecaster) -> String {
    match *f {
        Forecaster::LastValue => "last-value".to_string(),
        Forecaster::LinearTrend => "linear-trend".to_string(),
        Forecaster::Ewma { alpha } => format!("ewma({alpha})"),
        Forecaster::Overestimator { bias } => format!("overestimator({bias})"),
    }
}

pub fn demand_label(d: &DemandDist) -> String {
    let ln = |l: &LogNormalDemand| format!("lognormal({},{},{})", l.median_s, l.sigma, l.cap_s);
    match d {
        DemandDist::Constant(v) => format!("constant({v})"),
        DemandDist::Exponential { mean_s } => format!("exponential({mean_s})"),
        DemandDist::LogNormal(l) => ln(l),
        DemandDist::Mixture(parts) => {
            let inner: Vec<String> = parts.iter().map(|(w, l)| format!("{w}*{}", ln(l))).collect();
            format!("mixture({})", inner.join(";"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn durations() {
        assert_eq!(parse_duration("100ms").unwrap(), Duration::from_millis(100));
        assert_eq!(parse_duration("6h").unwrap(), Duration::from_secs(6 * 3600));
        assert_eq!(parse_duration("1h 30m").unwrap(), Duration::from_secs(5400));
        assert_eq!(parse_duration("250us").unwrap(), Duration::from_micros(250));
        assert!(parse_duration("10ns").is_err());
        assert!(parse_duration("fast").is_err());
    }

    #[test]
    fn empty_config_takes_defaults() {
        let cfg = RunConfig::parse("", None).unwrap();
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.workload, WorkloadSpec::default());
        assert_eq!(cfg.cluster, ClusterSpec::default());
        assert_eq!(cfg.scaler, ScalerPolicy::reactive());
        assert_eq!(cfg.sla.threshold(), Duration::from_millis(100));
        assert_eq!(cfg.warmup, Duration::ZERO);
    }

    #[test]
    fn full_config() {
        let text = r#"
seed = 11

[workload]
duration = "6h"
base_rate = 0.766
clock_offset = "17h"
demand = { kind = "mixture", components = [
    { weight = 0.85, median = 0.03, sigma = 0.5, cap = 1.0 },
    { weight = 0.15, median = 8.0, sigma = 0.5, cap = 80.0 },
] }

[[workload.surge]]
start = "1h"
length = "30m"
multiplier = 2.0

[cluster]
elastic_nodes_max = 10
utilization = "max"

[scaler]
kind = "proactive"
forecaster = "overestimator"
bias = 0.2
cooldown = "10s"
scale_down_on_forecast = false

[sla]
threshold = "250ms"
span_rule = "full"
count_mode = "spans"
warmup = "60s"
"#;
        let cfg = RunConfig::parse(text, None).unwrap();
        assert_eq!(cfg.seed, 11);
        assert_eq!(cfg.workload.seed, 11);
        assert_eq!(cfg.workload.clock_offset, Duration::from_secs(17 * 3600));
        assert_eq!(cfg.workload.surges.len(), 1);
        assert!(matches!(cfg.workload.demand, DemandDist::Mixture(ref v) if v.len() == 2));
        assert_eq!(cfg.cluster.elastic_nodes_max, 10);
        assert_eq!(cfg.cluster.utilization, UtilizationMode::NodeMax);
        assert_eq!(cfg.scaler.kind, ScalerKind::Proactive(Forecaster::Overestimator { bias: 0.2 }));
        assert_eq!(cfg.scaler.cooldown, Duration::from_secs(10));
        assert!(!cfg.scaler.scale_down_on_forecast);
        assert_eq!(cfg.sla.span_rule, SpanRule::FullTask);
        assert_eq!(cfg.sla.count_mode, CountMode::MergedSpans);
        assert_eq!(cfg.warmup, Duration::from_secs(60));
        assert_eq!(policy_label(&cfg.scaler), "proactive/overestimator(0.2)");
    }

    #[test]
    fn seed_override() {
        let cfg = RunConfig::parse("seed = 3", Some("99")).unwrap();
        assert_eq!((cfg.seed, cfg.workload.seed), (99, 99));
        let err = RunConfig::parse("seed = 3", Some("abc")).unwrap_err();
        assert_eq!(err.field, SEED_ENV);
    }

    #[test]
    fn field_level_errors() {
        let field = |text: &str| RunConfig::parse(text, None).unwrap_err().field;
        assert_eq!(field("[workload]\nbase_rate = -1.0"), "workload.base_rate");
        assert_eq!(field("[workload]\nduration = \"soon\""), "workload.duration");
        assert_eq!(field("[cluster]\nbase_nodes = 0"), "cluster.base_nodes");
        assert_eq!(field("[cluster]\nutilization = \"p99\""), "cluster.utilization");
        assert_eq!(field("[scaler]\nkind = \"magic\""), "scaler.kind");
        assert_eq!(field("[scaler]\nforecaster = \"ewma\""), "scaler.forecaster");
        assert_eq!(field("[scaler]\nup_threshold = 1.5"), "scaler.up_threshold");
        assert_eq!(field("[sla]\nthreshold = \"0s\""), "sla.threshold");
        assert_eq!(field("[sla]\nspan_rule = \"half\""), "sla.span_rule");
        assert_eq!(field("[workload]\nduration = \"1h\"\n[sla]\nwarmup = \"2h\""), "sla.warmup");
        let unknown = RunConfig::parse("[cluster]\nnodes = 3", None).unwrap_err();
        assert_eq!(unknown.field, "line 2");
        assert!(unknown.message.contains("nodes"), "{}", unknown.message);
    }
}
