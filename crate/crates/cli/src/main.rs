use std::path::PathBuf;

use anyhow::{anyhow, Result};
use clap::{Parser, Subcommand};
use latemetrics::commands::{cmd_analyze, cmd_compare, cmd_simulate, AnalyzeOptions, REPORT_FILE};
use latemetrics::config::parse_duration;
use latemetrics_core::sla::{CountMode, SpanRule};
use latemetrics_core::Duration;

#[derive(Parser)]
#[command(name = "latemetrics", version, about = "SLA-violation latency metrics and autoscaling simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and write trace, scaling log, CPU samples and report.
    Simulate {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Compute the metrics report of a trace file.
    Analyze {
        trace: PathBuf,
        /// SLA latency threshold, e.g. 100ms.
        #[arg(short, long, value_parser = duration_arg)]
        threshold: Duration,
        /// Drop this much of the horizon start, with tasks submitted in it.
        #[arg(long, value_parser = duration_arg)]
        warmup: Option<Duration>,
        #[arg(long, value_parser = span_rule_arg, default_value = "excess")]
        span_rule: SpanRule,
        #[arg(long, value_parser = count_mode_arg, default_value = "tasks")]
        count_mode: CountMode,
        /// Write the report here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compare two reports side by side.
    Compare { a: PathBuf, b: PathBuf },
}

fn duration_arg(s: &str) -> Result<Duration, String> {
    parse_duration(s)
}

fn span_rule_arg(s: &str) -> Result<SpanRule, String> {
    SpanRule::parse(s).ok_or_else(|| format!("expected excess|full, got {s:?}"))
}

fn count_mode_arg(s: &str) -> Result<CountMode, String> {
    CountMode::parse(s).ok_or_else(|| format!("expected tasks|spans, got {s:?}"))
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate { config, out } => {
            cmd_simulate(&config, &out)?;
            println!("{}", out.join(REPORT_FILE).display());
        }
        Command::Analyze { trace, threshold, warmup, span_rule, count_mode, output } => {
            let opts = AnalyzeOptions {
                threshold,
                warmup: warmup.unwrap_or(Duration::ZERO),
                span_rule,
                count_mode,
            };
            let text = cmd_analyze(&trace, &opts)?.render();
            match output {
                Some(path) => std::fs::write(&path, text)
                    .map_err(|e| anyhow!("writing {}: {e}", path.display()))?,
                None => print!("{text}"),
            }
        }
        Command::Compare { a, b } => print!("{}", cmd_compare(&a, &b)?),
    }
    Ok(())
}
