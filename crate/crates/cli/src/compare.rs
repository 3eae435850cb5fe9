//! Side-by-side comparison of two reports.

use std::fmt::Write as _;

use thiserror::Error;

use crate::report_io::{Report, NULL};

const COMPARED_SECTIONS: [&str; 3] = ["conventional", "sla", "resources"];

/// Headline lines: (section, key, label).
const HEADLINES: [(&str, &str, &str); 4] = [
    ("sla", "num_violations", "Number of Violations"),
    ("resources", "violation_time_s", "Time(Violations)"),
    ("resources", "node_seconds", "Node-seconds"),
    ("conventional", "mean_s", "Mean execution time"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub section: String,
    pub key: String,
    pub a: Option<f64>,
    pub b: Option<f64>,
}

impl Row {
    pub fn delta(&self) -> Option<f64> {
        Some(self.b? - self.a?)
    }

    /// `(b - a) / |a|` in percent; `None` when `a` is zero or either side is
    /// undefined.
    pub fn relative_pct(&self) -> Option<f64> {
        let a = self.a?;
        if a == 0.0 {
            return if self.b? == 0.0 { Some(0.0) } else { None };
        }
        Some(self.delta()? / a.abs() * 100.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("reports use different conventions; refusing to compare\n{}", .diff.join("\n"))]
pub struct ConventionMismatch {
    pub diff: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rows: Vec<Row>,
    /// `key: a -> b` lines for run metadata that differs (informational).
    pub run_diff: Vec<String>,
}

fn section_diff(a: &Report, b: &Report, name: &str) -> Vec<String> {
    let empty = Vec::new();
    let ea = a.section(name).map_or(&empty, |s| &s.entries);
    let eb = b.section(name).map_or(&empty, |s| &s.entries);
    let mut out = Vec::new();
    for (k, va) in ea {
        match eb.iter().find(|(kb, _)| kb == k) {
            Some((_, vb)) if vb == va => {}
            Some((_, vb)) => out.push(format!("  {k}: {va} -> {vb}")),
            None => out.push(format!("  {k}: {va} -> (absent)")),
        }
    }
    for (k, vb) in eb {
        if !ea.iter().any(|(ka, _)| ka == k) {
            out.push(format!("  {k}: (absent) -> {vb}"));
        }
    }
    out
}

pub fn compare(a: &Report, b: &Report) -> Result<Comparison, ConventionMismatch> {
    if a.section("conventions").is_none() || b.section("conventions").is_none() {
        return Err(ConventionMismatch { diff: vec!["  [conventions] section missing".into()] });
    }
    let diff = section_diff(a, b, "conventions");
    if !diff.is_empty() {
        return Err(ConventionMismatch { diff });
    }

    let mut rows = Vec::new();
    for name in COMPARED_SECTIONS {
        let Some(sa) = a.section(name) else { continue };
        for (key, va) in &sa.entries {
            let Some(vb) = b.get(name, key) else { continue };
            let num = |v: &str| v.parse::<f64>().ok();
            let (na, nb) = (num(va), num(vb));
            let numeric_or_null = |v: &str, n: Option<f64>| n.is_some() || v == NULL;
            if !(numeric_or_null(va, na) && numeric_or_null(vb, nb)) {
                continue;
            }
            rows.push(Row { section: name.to_string(), key: key.clone(), a: na, b: nb });
        }
    }
    Ok(Comparison { rows, run_diff: section_diff(a, b, "run") })
}

fn fmt_opt(v: Option<f64>, precision: usize) -> String {
    match v {
        Some(x) if x.fract() == 0.0 && x.abs() < 1e15 => format!("{x:.0}"),
        Some(x) => format!("{x:.precision$}"),
        None => NULL.to_string(),
    }
}

impl Comparison {
    pub fn row(&self, section: &str, key: &str) -> Option<&Row> {
        self.rows.iter().find(|r| r.section == section && r.key == key)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<30} {:>18} {:>18} {:>18} {:>10}",
            "metric", "a", "b", "b - a", "rel %"
        );
        for r in &self.rows {
            let name = format!("{}.{}", r.section, r.key);
            let rel = match r.relative_pct() {
                Some(p) => format!("{p:+.2}"),
                None => "n/a".to_string(),
            };
            let _ = writeln!(
                out,
                "{:<30} {:>18} {:>18} {:>18} {:>10}",
                name,
                fmt_opt(r.a, 6),
                fmt_opt(r.b, 6),
                fmt_opt(r.delta(), 6),
                rel
            );
        }
        out.push('\n');
        for (section, key, label) in HEADLINES {
            let Some(r) = self.row(section, key) else { continue };
            let line = match (r.a, r.b) {
                (Some(a), Some(b)) if a != 0.0 && b != 0.0 => {
                    let a_vs_b = (a - b) / b * 100.0;
                    let word = if a_vs_b >= 0.0 { "higher" } else { "lower" };
                    format!("{label}: a is {:.2}% {word} than b", a_vs_b.abs())
                }
                _ => format!("{label}: a = {}, b = {}", fmt_opt(r.a, 6), fmt_opt(r.b, 6)),
            };
            out.push_str(&line);
            out.push('\n');
        }
        if !self.run_diff.is_empty() {
            out.push_str("\nrun metadata differs:\n");
            for l in &self.run_diff {
                out.push_str(l);
                out.push('\n');
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report_io::Section;

    fn report(conv: &[(&str, &str)], values: &[(&str, &str, &str)]) -> Report {
        let mut run = Section::new("run");
        run.push("source", "test");
        let mut c = Section::new("conventions");
        for (k, v) in conv {
            c.push(k, v);
        }
        let mut sections = vec![run, c];
        for name in COMPARED_SECTIONS {
            let mut s = Section::new(name);
            for (sec, k, v) in values {
                if *sec == name {
                    s.push(k, v);
                }
            }
            sections.push(s);
        }
        Report { sections }
    }

    #[test]
    fn self_comparison_has_zero_deltas() {
        let r = report(
            &[("percentile", "nearest-rank")],
            &[("sla", "num_violations", "120"), ("sla", "m1_s", "null"), ("resources", "node_seconds", "5")],
        );
        let c = compare(&r, &r).unwrap();
        assert_eq!(c.rows.len(), 3);
        for row in &c.rows {
            if row.a.is_some() {
                assert_eq!(row.delta(), Some(0.0));
                assert_eq!(row.relative_pct(), Some(0.0));
            }
        }
        assert!(c.run_diff.is_empty());
    }

    #[test]
    fn convention_mismatch_is_refused_with_diff() {
        let a = report(&[("percentile", "nearest-rank")], &[]);
        let b = report(&[("percentile", "linear")], &[]);
        let err = compare(&a, &b).unwrap_err();
        assert_eq!(err.diff, vec!["  percentile: nearest-rank -> linear".to_string()]);
        assert!(err.to_string().contains("refusing"));
    }

    #[test]
    fn headline_lines_use_relative_percentages() {
        let a = report(&[], &[("sla", "num_violations", "1214.7"), ("resources", "node_seconds", "100")]);
        let b = report(&[], &[("sla", "num_violations", "1000"), ("resources", "node_seconds", "116.71")]);
        let text = compare(&a, &b).unwrap().render();
        assert!(text.contains("Number of Violations: a is 21.47% higher than b"), "{text}");
        assert!(text.contains("Node-seconds: a is 14.32% lower than b"), "{text}");
        let row = compare(&a, &b).unwrap().row("resources", "node_seconds").cloned().unwrap();
        assert!((row.relative_pct().unwrap() - 16.71).abs() < 1e-9);
    }
}
