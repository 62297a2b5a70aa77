//! Rendering of ranking results.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::evaluation::{contribution_table, RankingResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// Aligned plain-text table.
    Table,
    /// CSV with `#` comment lines for provenance.
    Delimited,
    /// JSON.
    Structured,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "table" | "text" => Ok(ReportFormat::Table),
            "csv" | "delimited" => Ok(ReportFormat::Delimited),
            "json" | "structured" => Ok(ReportFormat::Structured),
            other => Err(format!("unknown format `{other}` (table, csv, structured)")),
        }
    }
}

/// Structured report: the ranking plus provenance notes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuredReport {
    #[serde(flatten)]
    pub ranking: RankingResult,
    #[serde(default)]
    pub notes: Vec<String>,
}

fn exclusion_lines(result: &RankingResult) -> Vec<String> {
    result
        .exclusions
        .iter()
        .map(|e| {
            format!(
                "excluded {} on {} (requires {}): {}",
                e.technique_id, e.characteristic_id, e.required_category, e.reason
            )
        })
        .collect()
}

fn delimited(result: &RankingResult, notes: &[String]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# audience: {}", result.audience);
    for line in exclusion_lines(result).iter().chain(&result.diagnostics).chain(notes) {
        let _ = writeln!(out, "# {}", line.replace('\n', " "));
    }
    let table = contribution_table(result);
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>();
    let mut header = vec!["characteristic".to_string()];
    header.extend(table.columns.iter().cloned());
    w.write_record(&header).expect("in-memory write");
    for (name, row) in &table.rows {
        let mut rec = vec![name.clone()];
        rec.extend(fmt(row));
        w.write_record(&rec).expect("in-memory write");
    }
    if !table.columns.is_empty() {
        let mut rec = vec!["e".to_string()];
        rec.extend(fmt(&table.scores));
        w.write_record(&rec).expect("in-memory write");
    }
    let body = w.into_inner().expect("in-memory flush");
    out.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
    out
}

fn text_table(result: &RankingResult, notes: &[String]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Audience: {}", result.audience);
    let table = contribution_table(result);
    if table.columns.is_empty() {
        out.push_str("No technique survives the hard requirements.\n");
    } else {
        let first = table
            .rows
            .iter()
            .map(|(n, _)| n.len())
            .chain(["characteristic".len()])
            .max()
            .unwrap_or(0);
        let widths: Vec<usize> = table.columns.iter().map(|c| c.len().max(8)).collect();
        let line = |label: &str, cells: Vec<String>| {
            let mut s = format!("{label:<first$}");
            for (c, w) in cells.iter().zip(&widths) {
                let _ = write!(s, "  {c:>w$}");
            }
            s.push('\n');
            s
        };
        out.push_str(&line("characteristic", table.columns.clone()));
        let rule = first + widths.iter().map(|w| w + 2).sum::<usize>();
        out.push_str(&"-".repeat(rule));
        out.push('\n');
        for (name, row) in &table.rows {
            out.push_str(&line(name, row.iter().map(|v| format!("{v:.6}")).collect()));
        }
        out.push_str(&"-".repeat(rule));
        out.push('\n');
        out.push_str(&line("e", table.scores.iter().map(|v| format!("{v:.6}")).collect()));
        let _ = writeln!(out, "\nRanking: {}", result.ordering.join(" > "));
    }
    for line in exclusion_lines(result).iter().chain(&result.diagnostics) {
        let _ = writeln!(out, "{line}");
    }
    if !notes.is_empty() {
        out.push_str("\nNotes:\n");
        for n in notes {
            let _ = writeln!(out, "  {n}");
        }
    }
    out
}

pub fn export_report(result: &RankingResult, notes: &[String], format: ReportFormat) -> String {
    match format {
        ReportFormat::Table => text_table(result, notes),
        ReportFormat::Delimited => delimited(result, notes),
        ReportFormat::Structured => crate::io::to_canonical_json(&StructuredReport {
            ranking: result.clone(),
            notes: notes.to_vec(),
        }),
    }
}
