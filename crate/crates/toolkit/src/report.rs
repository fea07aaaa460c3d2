//! CSV and markdown rendering of benchmark reports, and a parser for both.
//!
//! Detection metrics are percentages with two decimals. Correlation
//! coefficients are rendered multiplied by 100, p-values in scientific
//! notation. Provenance is only rendered in markdown.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use cornercase_core::metrics::DetectionReport;
use cornercase_core::stats::{CorrelationKind, CorrelationResult};

use crate::bench::{BenchReport, CorrelationRow, ReportRow, SweepRow};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(format!("unknown report format {other:?} (expected csv or markdown)")),
        }
    }
}

pub const MAIN_HEADER: [&str; 6] = ["method", "dataset", "fpr_at_95", "auroc", "aupr_in", "aupr_out"];
pub const SWEEP_HEADER: [&str; 7] = ["method", "kind", "severity", "fpr_at_95", "auroc", "aupr_in", "aupr_out"];
pub const CORR_HEADER: [&str; 6] = ["method", "metric", "correlation", "n", "coefficient", "p_value"];
const PROV_HEADER: [&str; 2] = ["key", "value"];

fn pct(v: f64) -> String {
    format!("{v:.2}")
}

fn metric_cells(r: &DetectionReport) -> [String; 4] {
    [pct(r.fpr_at_95), pct(r.auroc), pct(r.aupr_in), pct(r.aupr_out)]
}

fn tables(report: &BenchReport) -> Vec<(&'static str, Vec<&'static str>, Vec<Vec<String>>)> {
    let mut out = Vec::new();
    let main = report
        .rows
        .iter()
        .map(|r| {
            let mut row = vec![r.method.clone(), r.dataset.clone()];
            row.extend(metric_cells(&r.report));
            row
        })
        .collect();
    out.push(("Detection", MAIN_HEADER.to_vec(), main));
    if !report.sweep_rows.is_empty() {
        let rows = report
            .sweep_rows
            .iter()
            .map(|r| {
                let mut row = vec![r.method.clone(), r.kind.clone(), r.severity.to_string()];
                row.extend(metric_cells(&r.report));
                row
            })
            .collect();
        out.push(("Sweep", SWEEP_HEADER.to_vec(), rows));
    }
    if !report.correlations.is_empty() {
        let rows = report
            .correlations
            .iter()
            .map(|c| {
                vec![
                    c.method.clone(),
                    c.metric.clone(),
                    c.result.kind.as_str().to_string(),
                    c.result.n.to_string(),
                    pct(c.result.coefficient * 100.0),
                    format!("{:.3e}", c.result.p_value),
                ]
            })
            .collect();
        out.push(("Correlations", CORR_HEADER.to_vec(), rows));
    }
    out
}

pub fn emit_report(report: &BenchReport, format: ReportFormat) -> String {
    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            for (i, (_, header, rows)) in tables(report).into_iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                writeln!(out, "{}", header.join(",")).unwrap();
                for row in rows {
                    writeln!(out, "{}", row.join(",")).unwrap();
                }
            }
        }
        ReportFormat::Markdown => {
            let mut sections = tables(report);
            if !report.provenance.is_empty() {
                let rows = report.provenance.iter().map(|(k, v)| vec![k.clone(), v.clone()]).collect();
                sections.push(("Provenance", PROV_HEADER.to_vec(), rows));
            }
            out.push_str("# Benchmark report\n");
            for (title, header, rows) in sections {
                write!(out, "\n## {title}\n\n| {} |\n|", header.join(" | ")).unwrap();
                for _ in &header {
                    out.push_str("---|");
                }
                out.push('\n');
                for row in rows {
                    writeln!(out, "| {} |", row.join(" | ")).unwrap();
                }
            }
        }
    }
    out
}

fn split_tables(text: &str, format: ReportFormat) -> Vec<Vec<Vec<String>>> {
    let mut tables = Vec::new();
    let mut cur: Vec<Vec<String>> = Vec::new();
    let mut flush = |cur: &mut Vec<Vec<String>>| {
        if !cur.is_empty() {
            tables.push(std::mem::take(cur));
        }
    };
    for line in text.lines() {
        let line = line.trim();
        match format {
            ReportFormat::Csv => {
                if line.is_empty() {
                    flush(&mut cur);
                } else {
                    cur.push(line.split(',').map(str::to_string).collect());
                }
            }
            ReportFormat::Markdown => {
                if let Some(inner) = line.strip_prefix('|').and_then(|l| l.strip_suffix('|')) {
                    let cells: Vec<String> = inner.split('|').map(|c| c.trim().to_string()).collect();
                    if !cells.iter().all(|c| !c.is_empty() && c.chars().all(|ch| ch == '-' || ch == ':')) {
                        cur.push(cells);
                    }
                } else {
                    flush(&mut cur);
                }
            }
        }
    }
    flush(&mut cur);
    tables
}

fn num<T: FromStr>(cell: &str, what: &str, path: &Path) -> Result<T> {
    cell.parse().map_err(|_| Error::format(path, format!("bad {what} value {cell:?}")))
}

fn metrics(cells: &[String], path: &Path) -> Result<DetectionReport> {
    Ok(DetectionReport {
        fpr_at_95: num(&cells[0], "fpr_at_95", path)?,
        auroc: num(&cells[1], "auroc", path)?,
        aupr_in: num(&cells[2], "aupr_in", path)?,
        aupr_out: num(&cells[3], "aupr_out", path)?,
    })
}

/// Parses a rendered report. Values come back at rendered precision, so
/// re-emitting the result reproduces the input text.
pub fn parse_report(text: &str, format: ReportFormat, path: &Path) -> Result<BenchReport> {
    let mut report = BenchReport::default();
    let mut seen_main = false;
    for table in split_tables(text, format) {
        let header: Vec<&str> = table[0].iter().map(String::as_str).collect();
        let body = &table[1..];
        for row in body {
            if row.len() != header.len() {
                return Err(Error::format(path, format!("row has {} cells, header has {}", row.len(), header.len())));
            }
        }
        if header == MAIN_HEADER {
            seen_main = true;
            for r in body {
                report.rows.push(ReportRow { method: r[0].clone(), dataset: r[1].clone(), report: metrics(&r[2..], path)? });
            }
        } else if header == SWEEP_HEADER {
            for r in body {
                report.sweep_rows.push(SweepRow {
                    method: r[0].clone(),
                    kind: r[1].clone(),
                    severity: num(&r[2], "severity", path)?,
                    report: metrics(&r[3..], path)?,
                });
            }
        } else if header == CORR_HEADER {
            for r in body {
                let kind = match r[2].as_str() {
                    "pearson" => CorrelationKind::Pearson,
                    "spearman" => CorrelationKind::Spearman,
                    other => return Err(Error::format(path, format!("unknown correlation {other:?}"))),
                };
                let coefficient: f64 = num(&r[4], "coefficient", path)?;
                report.correlations.push(CorrelationRow {
                    method: r[0].clone(),
                    metric: r[1].clone(),
                    result: CorrelationResult {
                        coefficient: coefficient / 100.0,
                        p_value: num(&r[5], "p_value", path)?,
                        n: num(&r[3], "n", path)?,
                        kind,
                    },
                });
            }
        } else if header == PROV_HEADER {
            report.provenance.extend(body.iter().map(|r| (r[0].clone(), r[1].clone())));
        } else {
            return Err(Error::format(path, format!("unrecognised table header {:?}", header.join(","))));
        }
    }
    if !seen_main {
        return Err(Error::format(path, "no detection table found"));
    }
    Ok(report)
}
