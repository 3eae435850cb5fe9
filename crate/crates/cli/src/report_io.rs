//! Structured text reports.
//!
//! A report is a header line followed by `[section]` blocks of `key = value`
//! lines in a fixed order. Undefined metrics are written as `null` and
//! followed by a `<key>_reason` or `<key>_flag` line. Floats use the
//! shortest representation that parses back to the same bits.

use std::fmt::Write as _;

use latemetrics_core::conventional::MetricError;
use latemetrics_core::report::MetricsReport;
use thiserror::Error;

pub const REPORT_HEADER: &str = "#latemetrics-report v1";
pub const NULL: &str = "null";
pub const PERFECT: &str = "perfect";

/// Sections whose values are metrics rather than run bookkeeping.
pub const METRIC_SECTIONS: [&str; 4] = ["conventions", "conventional", "sla", "resources"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    pub name: String,
    pub entries: Vec<(String, String)>,
}

impl Section {
    pub fn new(name: &str) -> Self {
        Section { name: name.to_string(), entries: Vec::new() }
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Report {
    pub sections: Vec<Section>,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct ReportParseError {
    pub line: usize,
    pub message: String,
}

impl Report {
    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.section(section)?.get(key)
    }

    /// Numeric value, `None` when absent, null or not a number.
    pub fn number(&self, section: &str, key: &str) -> Option<f64> {
        self.get(section, key)?.parse().ok()
    }

    /// The report restricted to metric sections; equal for any two runs that
    /// produced the same numbers under the same conventions.
    pub fn metrics_only(&self) -> Report {
        Report {
            sections: self
                .sections
                .iter()
                .filter(|s| METRIC_SECTIONS.contains(&s.name.as_str()))
                .cloned()
                .collect(),
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::from(REPORT_HEADER);
        out.push('\n');
        for s in &self.sections {
            let _ = write!(out, "\n[{}]\n", s.name);
            for (k, v) in &s.entries {
                let _ = writeln!(out, "{k} = {v}");
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Report, ReportParseError> {
        let err = |line, message: &str| ReportParseError { line, message: message.to_string() };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, REPORT_HEADER)) => {}
            _ => return Err(err(1, "missing report header")),
        }
        let mut report = Report::default();
        for (n, l) in lines {
            if l.is_empty() {
                continue;
            }
            if let Some(name) = l.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
                report.sections.push(Section::new(name));
                continue;
            }
            let (k, v) = l.split_once(" = ").ok_or_else(|| err(n, "expected `key = value`"))?;
            let section = report.sections.last_mut().ok_or_else(|| err(n, "entry outside a section"))?;
            section.push(k, v);
        }
        Ok(report)
    }
}

fn push_metric(section: &mut Section, key: &str, value: &Result<f64, MetricError>) {
    match value {
        Ok(v) => section.push(key, v),
        Err(e) => {
            section.push(key, NULL);
            section.push(&format!("{key}_reason"), e.code());
        }
    }
}

fn push_perfect(section: &mut Section, key: &str, value: Option<f64>) {
    match value {
        Some(v) => section.push(key, v),
        None => {
            section.push(key, NULL);
            section.push(&format!("{key}_flag"), PERFECT);
        }
    }
}

const MACHINE_COLUMNS: [(&str, &str); 16] = [
    ("conventional", "sample_size"),
    ("conventional", "mean_s"),
    ("conventional", "median_s"),
    ("conventional", "stddev_s"),
    ("conventional", "max_s"),
    ("conventional", "skewness"),
    ("conventional", "kurtosis"),
    ("conventional", "tail_p98_s"),
    ("sla", "num_violations"),
    ("sla", "m1_s"),
    ("sla", "m2_s"),
    ("sla", "m3"),
    ("sla", "m4"),
    ("sla", "m5"),
    ("resources", "node_seconds"),
    ("resources", "violation_time_s"),
];

/// Builds the full report: `run` is caller-supplied metadata that goes first.
pub fn build_report(run: Section, m: &MetricsReport) -> Report {
    let c = &m.conventions;
    let mut conv = Section::new("conventions");
    conv.push("latency", "finish-minus-submit");
    conv.push("moments", c.moments);
    conv.push("percentile", c.percentile);
    conv.push("kurtosis", c.kurtosis);
    conv.push("threshold_us", c.threshold.as_micros());
    conv.push("violation", "exec-time-greater-than-threshold");
    conv.push("span_rule", c.span_rule.as_str());
    conv.push("count_mode", c.count_mode.as_str());

    let r = &m.conventional;
    let mut cr = Section::new("conventional");
    cr.push("sample_size", r.sample_size);
    for (name, value) in r.fields() {
        push_metric(&mut cr, name, &value);
    }

    let s = &m.sla;
    let mut sla = Section::new("sla");
    sla.push("num_violations", s.summary.num_violations);
    sla.push("violating_tasks", s.summary.violating_tasks);
    sla.push("violation_spans", s.summary.time_violations.len());
    push_perfect(&mut sla, "m1_s", s.m1_s);
    sla.push("m2_s", s.m2_s);
    sla.push("m3", s.m3);
    push_perfect(&mut sla, "m4", s.m4);
    sla.push("m5", s.m5);

    let x = &m.resources;
    let h = m.sla.summary.horizon;
    let mut res = Section::new("resources");
    res.push("tasks", x.tasks);
    res.push("horizon_start_us", h.start().as_micros());
    res.push("horizon_end_us", h.end().as_micros());
    res.push("horizon_s", x.horizon_s);
    res.push("node_seconds", x.node_seconds);
    res.push("num_violations", x.num_violations);
    res.push("violation_time_s", x.violation_time_s);
    res.push("clean_time_s", x.clean_time_s);

    let mut report = Report { sections: vec![run, conv, cr, sla, res] };
    let values: Vec<&str> = MACHINE_COLUMNS
        .iter()
        .map(|(sec, key)| report.get(sec, key).unwrap_or(NULL))
        .collect();
    let mut machine = Section::new("machine");
    machine.push("columns", MACHINE_COLUMNS.map(|(_, k)| k).join(","));
    machine.push("values", values.join(","));
    report.sections.push(machine);
    report
}
