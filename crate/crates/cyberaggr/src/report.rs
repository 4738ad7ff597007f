//! Results table: one row per target, feature set and model.

use cyberaggr_core::cv::{EvalReport, PermutationBaseline};
use serde::{Deserialize, Serialize};

pub const COLUMNS: [&str; 6] = ["Prediction target", "Features", "Model", "ACC", "F1", "AUC"];

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    pub columns: Vec<String>,
    /// Formatted cells, exactly as printed in the text table.
    pub rows: Vec<Vec<String>>,
    pub reports: Vec<EvalReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub permutation: Vec<PermutationSummary>,
}

/// Chance-level reference for one experiment row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PermutationSummary {
    pub row: usize,
    pub shuffles: usize,
    pub mean_acc: Option<f64>,
    pub mean_macro_f1: Option<f64>,
    pub mean_auc: Option<f64>,
    pub baseline: PermutationBaseline,
}

pub fn row_cells(r: &EvalReport) -> Vec<String> {
    vec![
        r.target.display_name().to_string(),
        r.features.label(),
        r.model.clone(),
        pct(r.acc),
        pct(r.macro_f1),
        pct(r.ovr_auc),
    ]
}

pub fn build(reports: Vec<EvalReport>) -> ReportTable {
    ReportTable {
        columns: COLUMNS.iter().map(|c| c.to_string()).collect(),
        rows: reports.iter().map(row_cells).collect(),
        reports,
        permutation: Vec::new(),
    }
}

pub fn render_text(t: &ReportTable) -> String {
    let mut widths: Vec<usize> = t.columns.iter().map(|c| c.chars().count()).collect();
    for row in &t.rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let parts: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let pad = widths[i] - c.chars().count();
                if i < 3 {
                    format!("{c}{}", " ".repeat(pad))
                } else {
                    format!("{}{c}", " ".repeat(pad))
                }
            })
            .collect();
        parts.join("  ").trim_end().to_string()
    };
    let mut out = line(&t.columns);
    out.push('\n');
    out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
    out.push('\n');
    for row in &t.rows {
        out.push_str(&line(row));
        out.push('\n');
    }
    for p in &t.permutation {
        let f = |x: Option<f64>| x.map(pct).unwrap_or_else(|| "-".into());
        out.push_str(&format!(
            "permutation baseline, row {} ({} shuffles): ACC {}  F1 {}  AUC {}\n",
            p.row + 1,
            p.shuffles,
            f(p.mean_acc),
            f(p.mean_macro_f1),
            f(p.mean_auc)
        ));
    }
    out
}

/// Parses the rows back out of a rendered text table.
pub fn parse_text_rows(text: &str) -> Vec<Vec<String>> {
    let mut lines = text.lines();
    lines.next();
    let rule = lines.next().unwrap_or("");
    let mut spans = Vec::new();
    let mut start = None;
    let rule: Vec<char> = rule.chars().collect();
    for (i, ch) in rule.iter().enumerate() {
        match (ch, start) {
            ('-', None) => start = Some(i),
            (' ', Some(s)) => {
                spans.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        spans.push((s, rule.len()));
    }
    lines
        .take_while(|l| !l.starts_with("permutation baseline"))
        .map(|l| {
            let chars: Vec<char> = l.chars().collect();
            spans
                .iter()
                .map(|&(a, b)| chars[a.min(chars.len())..b.min(chars.len())].iter().collect::<String>().trim().to_string())
                .collect()
        })
        .collect()
}
