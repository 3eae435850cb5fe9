//! The `simulate`, `analyze` and `compare` commands.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use latemetrics_core::report::analyze;
use latemetrics_core::sim::{simulate, SimOutput, UtilizationMode};
use latemetrics_core::sla::{CountMode, SlaPolicy, SpanRule};
use latemetrics_core::{Duration, Trace};

use crate::compare::compare;
use crate::config::{demand_label, policy_label, RunConfig, SEED_ENV};
use crate::report_io::{build_report, Report, Section};
use crate::series_io::{render_cpu_samples, render_scaling_log};
use crate::trace_io::{read_trace, render_trace};

pub const TRACE_FILE: &str = "trace.lm";
pub const SCALING_FILE: &str = "scaling.log";
pub const CPU_FILE: &str = "cpu.csv";
pub const REPORT_FILE: &str = "report.txt";

/// `[run]` metadata for a simulated run.
pub fn run_section(cfg: &RunConfig) -> Section {
    let w = &cfg.workload;
    let c = &cfg.cluster;
    let s = &cfg.scaler;
    let mut run = Section::new("run");
    run.push("source", "simulate");
    run.push("seed", cfg.seed);
    run.push("duration_us", w.duration.as_micros());
    run.push("base_rate", w.base_rate);
    run.push("clock_offset_us", w.clock_offset.as_micros());
    let knots: Vec<String> =
        w.profile.knots().iter().map(|(t, m)| format!("{}:{m}", t.as_micros())).collect();
    run.push("profile", knots.join(";"));
    run.push("demand", demand_label(&w.demand));
    let surges: Vec<String> = w
        .surges
        .iter()
        .map(|x| format!("{}+{}x{}", x.start.as_micros(), x.length.as_micros(), x.multiplier))
        .collect();
    run.push("surges", if surges.is_empty() { "none".to_string() } else { surges.join(";") });
    run.push("base_nodes", c.base_nodes);
    run.push("elastic_nodes_max", c.elastic_nodes_max);
    run.push("capacity", c.capacity);
    run.push("startup_delay_us", c.startup_delay.as_micros());
    run.push("sample_period_us", c.sample_period.as_micros());
    let util = match c.utilization {
        UtilizationMode::ClusterMean => "cluster-mean",
        UtilizationMode::NodeMax => "node-max",
    };
    run.push("utilization", util);
    run.push("policy", policy_label(s));
    run.push("up_threshold", s.up_threshold);
    run.push("down_threshold", s.down_threshold);
    run.push("history_len", s.history_len);
    run.push("lead_time_us", s.lead_time.as_micros());
    run.push("step", s.step);
    run.push("cooldown_us", s.cooldown.as_micros());
    run.push("scale_down_on_forecast", s.scale_down_on_forecast);
    run.push("warmup_us", cfg.warmup.as_micros());
    run
}

/// Runs the simulation described by `cfg` and builds its report.
pub fn run_simulation(cfg: &RunConfig) -> Result<(SimOutput, Report)> {
    let arrivals = cfg.workload.arrivals()?;
    let out = simulate(arrivals, cfg.workload.duration, &cfg.cluster, &cfg.scaler)?;
    let trimmed = out.trace.trim_start(cfg.warmup)?;
    let metrics = analyze(&trimmed, &cfg.sla)?;
    let report = build_report(run_section(cfg), &metrics);
    Ok((out, report))
}

fn write(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// Simulates and writes trace, scaling log, CPU samples and report into
/// `out_dir`.
pub fn simulate_to_dir(cfg: &RunConfig, out_dir: &Path) -> Result<Report> {
    let (out, report) = run_simulation(cfg)?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    write(out_dir, TRACE_FILE, &render_trace(&out.trace))?;
    write(out_dir, SCALING_FILE, &render_scaling_log(&out.scaling_log))?;
    write(out_dir, CPU_FILE, &render_cpu_samples(&out.cpu_samples))?;
    write(out_dir, REPORT_FILE, &report.render())?;
    Ok(report)
}

pub fn load_config(path: &Path, seed_override: Option<&str>) -> Result<RunConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    RunConfig::parse(&text, seed_override).with_context(|| format!("invalid config {}", path.display()))
}

pub fn cmd_simulate(config_path: &Path, out_dir: &Path) -> Result<Report> {
    let seed = std::env::var(SEED_ENV).ok();
    let cfg = load_config(config_path, seed.as_deref())?;
    simulate_to_dir(&cfg, out_dir)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyzeOptions {
    pub threshold: Duration,
    pub warmup: Duration,
    pub span_rule: SpanRule,
    pub count_mode: CountMode,
}

impl AnalyzeOptions {
    pub fn new(threshold: Duration) -> Self {
        AnalyzeOptions {
            threshold,
            warmup: Duration::ZERO,
            span_rule: SpanRule::default(),
            count_mode: CountMode::default(),
        }
    }

    pub fn policy(&self) -> Result<SlaPolicy> {
        Ok(SlaPolicy::new(self.threshold)?
            .with_span_rule(self.span_rule)
            .with_count_mode(self.count_mode))
    }
}

pub fn analyze_trace(trace: &Trace, run: Section, opts: &AnalyzeOptions) -> Result<Report> {
    let trimmed = trace.trim_start(opts.warmup)?;
    let metrics = analyze(&trimmed, &opts.policy()?)?;
    Ok(build_report(run, &metrics))
}

pub fn cmd_analyze(trace_path: &Path, opts: &AnalyzeOptions) -> Result<Report> {
    let trace = read_trace(trace_path).with_context(|| format!("reading {}", trace_path.display()))?;
    let mut run = Section::new("run");
    run.push("source", "analyze");
    run.push("trace", trace_path.display());
    run.push("warmup_us", opts.warmup.as_micros());
    analyze_trace(&trace, run, opts)
}

pub fn read_report(path: &Path) -> Result<Report> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Report::parse(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn cmd_compare(a: &Path, b: &Path) -> Result<String> {
    let ra = read_report(a)?;
    let rb = read_report(b)?;
    let cmp = compare(&ra, &rb)?;
    Ok(format!("a = {}\nb = {}\n\n{}", a.display(), b.display(), cmp.render()))
}
