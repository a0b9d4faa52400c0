use std::fmt::Write as _;

use super::metrics::{Metric, MetricReport, MetricValue};

pub const REPORT_HEADER: &str = "Strategy\tVariable Utilized\tPopulation\tMethod\t\
Mean Misclassification Error (MMCE)\tSensitivity\tSpecificity\tPrecision\tF1 - Score";

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub label: String,
    pub variables: String,
    pub population: String,
    pub method: String,
    pub report: MetricReport,
}

/// `"0.160 (± 0.020)"`; `"-"` when undefined; `*` marks a partial SE.
pub fn format_cell(v: &MetricValue) -> String {
    let Some(value) = v.value else {
        return "-".to_string();
    };
    let se = v.se.map_or_else(|| "-".to_string(), |s| format!("{s:.3}"));
    let star = if v.partial { "*" } else { "" };
    format!("{value:.3} (± {se}){star}")
}

pub fn emit_report(rows: &[ReportRow]) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in rows {
        let cells: Vec<String> = Metric::ALL.iter().map(|&m| format_cell(r.report.get(m))).collect();
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            r.label,
            r.variables,
            r.population,
            r.method,
            cells.join("\t")
        );
    }
    out
}
