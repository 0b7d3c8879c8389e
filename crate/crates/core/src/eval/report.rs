//! CSV and plain-text table emitters. Every CSV starts with the run
//! fingerprint and a provenance note as `#` comment lines.

use std::path::Path;

use crate::analysis::{AgreementMatrix, CenterBiasScore, ExplorativenessReport};
use crate::error::{Error, Result};
use crate::eval::{EvalReport, Fingerprint};
use crate::gaze::AgeGroup;

pub const COHORT_NOTE: &str = "# values computed on the supplied cohort only";

/// One table row per group, one column per subset label.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetTable {
    pub columns: Vec<String>,
    pub rows: Vec<SubsetRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetRow {
    pub group: AgeGroup,
    pub scores: Vec<f64>,
    pub best: String,
}

fn csv_document(fingerprint: &Fingerprint, header: &[String], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_error)?;
    for r in rows {
        w.write_record(r).map_err(csv_error)?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| csv_error(e.into_error().into()))?)
        .expect("csv output is utf-8");
    Ok(format!("{}\n{COHORT_NOTE}\n{body}", fingerprint.header_line()))
}

fn csv_error(e: csv::Error) -> Error {
    Error::Degenerate(format!("csv encoding failed: {e}"))
}

fn strings<const N: usize>(items: [&str; N]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

pub fn entropy_csv(report: &ExplorativenessReport, fp: &Fingerprint) -> Result<String> {
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| vec![r.group.to_string(), r.image_id.clone(), r.entropy.to_string()])
        .collect();
    csv_document(fp, &strings(["group", "image_id", "entropy"]), &rows)
}

pub fn entropy_summary_csv(report: &ExplorativenessReport, fp: &Fingerprint) -> Result<String> {
    let rho = report.spearman.map_or_else(|| "NA".to_string(), |r| r.to_string());
    let rows: Vec<Vec<String>> = report
        .groups
        .iter()
        .map(|g| vec![g.group.to_string(), g.mean.to_string(), g.images.to_string(), rho.clone()])
        .collect();
    csv_document(fp, &strings(["group", "mean_entropy", "images", "spearman_rho"]), &rows)
}

pub fn agreement_csv(m: &AgreementMatrix, fp: &Fingerprint) -> Result<String> {
    let mut header = vec!["source".to_string()];
    header.extend(AgeGroup::ALL.iter().map(|g| g.to_string()));
    let rows: Vec<Vec<String>> = AgeGroup::ALL
        .iter()
        .map(|&s| {
            let mut r = vec![s.to_string()];
            r.extend(AgeGroup::ALL.iter().map(|&t| m.get(s, t).to_string()));
            r
        })
        .collect();
    csv_document(fp, &header, &rows)
}

pub fn center_bias_csv(scores: &[CenterBiasScore], fp: &Fingerprint) -> Result<String> {
    let rows: Vec<Vec<String>> = scores
        .iter()
        .map(|s| vec![s.group.to_string(), s.mean.to_string(), s.per_image.len().to_string()])
        .collect();
    csv_document(fp, &strings(["group", "mean_auc", "images"]), &rows)
}

pub fn subset_table_csv(table: &SubsetTable, fp: &Fingerprint) -> Result<String> {
    let mut header = vec!["group".to_string()];
    header.extend(table.columns.iter().cloned());
    header.push("best".into());
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| {
            let mut row = vec![r.group.to_string()];
            row.extend(r.scores.iter().map(f64::to_string));
            row.push(r.best.clone());
            row
        })
        .collect();
    csv_document(fp, &header, &rows)
}

/// Per-image rows followed by a `mean` row.
pub fn eval_report_csv(report: &EvalReport) -> Result<String> {
    let mut rows: Vec<Vec<String>> = report
        .per_image
        .iter()
        .map(|s| {
            vec![
                report.model_id.clone(),
                report.group.to_string(),
                s.image_id.clone(),
                s.auc.map_or_else(|| "NA".into(), |a| a.to_string()),
                s.error.clone().unwrap_or_default(),
            ]
        })
        .collect();
    rows.push(vec![
        report.model_id.clone(),
        report.group.to_string(),
        "mean".into(),
        report.mean_auc.map_or_else(|| "NA".into(), |a| a.to_string()),
        String::new(),
    ]);
    csv_document(
        &report.fingerprint,
        &strings(["model", "group", "image_id", "auc", "error"]),
        &rows,
    )
}

/// Reads back the `mean` row written by [`eval_report_csv`].
pub fn mean_from_eval_csv(text: &str) -> Option<f64> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    r.records()
        .filter_map(|rec| rec.ok())
        .find(|rec| rec.get(2) == Some("mean"))
        .and_then(|rec| rec.get(3)?.parse().ok())
}

/// Left-aligned first column, right-aligned numbers with four decimals.
pub fn text_table(header: &[String], rows: &[(String, Vec<f64>)]) -> String {
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|(label, vals)| {
            std::iter::once(label.clone())
                .chain(vals.iter().map(|v| format!("{v:.4}")))
                .collect()
        })
        .collect();
    let mut widths: Vec<usize> = header.iter().map(String::len).collect();
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let line = |row: &[String]| {
        row.iter()
            .enumerate()
            .map(|(i, c)| if i == 0 { format!("{c:<w$}", w = widths[0]) } else { format!("{c:>w$}", w = widths[i]) })
            .collect::<Vec<_>>()
            .join("  ")
    };
    let mut out = line(header);
    out.push('\n');
    out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
    out.push('\n');
    for row in &cells {
        out.push_str(&line(row));
        out.push('\n');
    }
    out
}

pub fn agreement_text(m: &AgreementMatrix) -> String {
    let mut header = vec!["source\\target".to_string()];
    header.extend(AgeGroup::ALL.iter().map(|g| g.to_string()));
    let rows: Vec<(String, Vec<f64>)> = AgeGroup::ALL
        .iter()
        .map(|&s| (s.to_string(), AgeGroup::ALL.iter().map(|&t| m.get(s, t)).collect()))
        .collect();
    text_table(&header, &rows)
}

pub fn subset_table_text(table: &SubsetTable) -> String {
    let mut header = vec!["group".to_string()];
    header.extend(table.columns.iter().cloned());
    let rows: Vec<(String, Vec<f64>)> = table
        .rows
        .iter()
        .map(|r| (format!("{} (best {})", r.group, r.best), r.scores.clone()))
        .collect();
    text_table(&header, &rows)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
