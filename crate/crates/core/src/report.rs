//! Rendering of reports as CSV, JSON or aligned text tables, and run
//! manifests.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::classify::{ExperimentReport, Metrics};
use crate::error::{Error, Result};
use crate::model::{MarkClass, RefinedRecord};
use crate::refine::{summarize_refinement, RefineCoeffs, RefinementSummary};
use crate::stats::{
    compare_models, correlation_matrix, group_means, CorrelationMatrix, Factor, GroupMeansTable, ModelComparison, TTestResult,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Format {
    Csv,
    #[default]
    Json,
    Table,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "table" => Ok(Format::Table),
            _ => Err(Error::Config(format!("unknown format `{s}`"))),
        }
    }
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Table => "txt",
        }
    }
}

/// Aligned plain-text table; first column left-aligned, others right.
fn text_table(title: &str, headers: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let mut s = String::new();
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            let pad = w - cell.chars().count();
            if i == 0 {
                s.push_str(cell);
                s.push_str(&" ".repeat(pad));
            } else {
                s.push_str(&" ".repeat(pad));
                s.push_str(cell);
            }
        }
        s.trim_end().to_string()
    };
    let mut out = String::new();
    let _ = writeln!(out, "{title}");
    let _ = writeln!(out, "{}", line(headers));
    let _ = writeln!(out, "{}", "-".repeat(widths.iter().sum::<usize>() + 2 * widths.len().saturating_sub(1)));
    for row in rows {
        let _ = writeln!(out, "{}", line(row));
    }
    out
}

fn csv_block(headers: &[String], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(headers).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

/// A titled table rendered in every format.
struct Section {
    title: String,
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Section {
    fn new(title: &str, headers: &[&str]) -> Self {
        Section { title: title.to_string(), headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }
}

fn render_sections<T: Serialize>(value: &T, sections: &[Section], format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
            s.push('\n');
            s
        }
        Format::Csv => {
            sections.iter().map(|s| format!("# {}\n{}", s.title, csv_block(&s.headers, &s.rows))).collect::<Vec<_>>().join("\n")
        }
        Format::Table => sections.iter().map(|s| text_table(&s.title, &s.headers, &s.rows)).collect::<Vec<_>>().join("\n"),
    }
}

fn f(v: f64, digits: usize) -> String {
    format!("{v:.digits$}")
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map(|x| f(x, digits)).unwrap_or_else(|| "NA".to_string())
}

#[derive(Debug, Clone, Serialize)]
struct NamedTTest<'a> {
    comparison: &'a str,
    #[serde(flatten)]
    result: TTestResult,
}

pub fn render_ttests(tests: &[(&str, TTestResult)], format: Format) -> String {
    let named: Vec<NamedTTest> = tests.iter().map(|(c, r)| NamedTTest { comparison: c, result: *r }).collect();
    let mut s = Section::new("Paired t-tests", &["comparison", "t", "p", "df", "mean_diff"]);
    for (c, r) in tests {
        s.rows.push(vec![c.to_string(), f(r.t, 2), f(r.p, 3), r.df.to_string(), f(r.mean_diff, 4)]);
    }
    render_sections(&named, &[s], format)
}

/// Everything `stats summary` reports over a refined table.
#[derive(Debug, Clone, Serialize)]
pub struct StatsSummary {
    pub records: usize,
    pub group_means: GroupMeansTable,
    pub refinement: Option<RefinementSummary>,
    pub correlations: CorrelationMatrix,
    /// Module mark against assessment index; `None` when degenerate.
    pub model_comparison: Option<ModelComparison>,
}

pub fn stats_summary(records: &[RefinedRecord]) -> StatsSummary {
    let plain: Vec<_> = records.iter().map(|r| r.record.clone()).collect();
    let (x, y): (Vec<f64>, Vec<f64>) = records.iter().filter_map(|r| Some((f64::from(r.mai?), r.record.module_mark?))).unzip();
    StatsSummary {
        records: records.len(),
        group_means: group_means(&plain),
        refinement: summarize_refinement(records).ok(),
        correlations: correlation_matrix(&plain, &Factor::TABLE),
        model_comparison: compare_models(&x, &y).ok(),
    }
}

fn means_section(t: &GroupMeansTable) -> Section {
    let mut s =
        Section::new("Average module marks by assessment method", &["department", "students", "exam", "coursework", "mixed"]);
    for r in &t.rows {
        s.rows.push(vec![
            r.department.to_string(),
            r.student_count.to_string(),
            opt(r.means[0], 2),
            opt(r.means[1], 2),
            opt(r.means[2], 2),
        ]);
    }
    s
}

fn refinement_section(r: &RefinementSummary) -> Section {
    let mut s = Section::new("Refined marks", &["group", "modules", "mean_mm", "mean_rmm"]);
    for g in &r.groups {
        s.rows.push(vec![g.label.to_string(), g.module_count.to_string(), f(g.mean_mm, 2), f(g.mean_rmm, 2)]);
    }
    s
}

fn correlation_section(m: &CorrelationMatrix) -> Section {
    let mut headers = vec![""];
    headers.extend(m.factors.iter().map(|f| f.label()));
    let mut s = Section::new("Pearson correlation", &headers);
    for (i, fi) in m.factors.iter().enumerate() {
        let mut row = vec![fi.label().to_string()];
        for j in 0..m.factors.len() {
            row.push(if j < i { opt(m.cells[i][j], 3) } else { String::new() });
        }
        s.rows.push(row);
    }
    s
}

fn comparison_section(c: &ModelComparison) -> Section {
    let mut s = Section::new("Module mark against assessment index", &["model", "beta0", "beta1", "beta2", "r_squared"]);
    for (name, fit) in [("linear", &c.linear), ("quadratic", &c.quadratic)] {
        s.rows.push(vec![name.to_string(), f(fit.beta0, 5), f(fit.beta1, 5), f(fit.beta2, 5), f(fit.r_squared, 5)]);
    }
    s
}

pub fn render_stats_summary(summary: &StatsSummary, format: Format) -> String {
    let mut sections = vec![means_section(&summary.group_means)];
    if let Some(r) = &summary.refinement {
        sections.push(refinement_section(r));
    }
    sections.push(correlation_section(&summary.correlations));
    if let Some(c) = &summary.model_comparison {
        sections.push(comparison_section(c));
    }
    render_sections(summary, &sections, format)
}

pub fn render_refinement(summary: &RefinementSummary, format: Format) -> String {
    render_sections(summary, &[refinement_section(summary)], format)
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub comparison: ModelComparison,
    pub coefficients: RefineCoeffs,
}

pub fn render_fit(report: &FitReport, format: Format) -> String {
    let mut coeffs = Section::new("Refinement coefficients", &["beta1", "beta2"]);
    coeffs.rows.push(vec![f(report.coefficients.beta1, 6), f(report.coefficients.beta2, 6)]);
    render_sections(report, &[comparison_section(&report.comparison), coeffs], format)
}

fn metrics_sections(label: &str, m: &Metrics) -> Vec<Section> {
    let mut counts = Section::new(&format!("{label}: confusion (rows actual, columns predicted)"), &[]);
    counts.headers = std::iter::once(String::new())
        .chain(MarkClass::ALL.iter().map(|c| c.label().to_string()))
        .chain(std::iter::once("Σ".to_string()))
        .collect();
    let pct = m.column_percentages();
    let mut percent = Section::new(&format!("{label}: column percentages"), &[]);
    percent.headers = counts.headers.clone();
    for c in MarkClass::ALL {
        let i = c.index();
        let row: Vec<u64> = m.confusion[i].to_vec();
        counts.rows.push(
            std::iter::once(c.label().to_string())
                .chain(row.iter().map(|v| v.to_string()))
                .chain(std::iter::once(row.iter().sum::<u64>().to_string()))
                .collect(),
        );
        percent.rows.push(
            std::iter::once(c.label().to_string())
                .chain(pct[i].iter().map(|v| v.map(|p| format!("{p:.1}%")).unwrap_or_else(|| "NA".into())))
                .chain(std::iter::once(row.iter().sum::<u64>().to_string()))
                .collect(),
        );
    }
    let col_totals: Vec<u64> = (0..MarkClass::COUNT).map(|j| (0..MarkClass::COUNT).map(|i| m.confusion[i][j]).sum()).collect();
    let totals: Vec<String> = std::iter::once("Σ".to_string())
        .chain(col_totals.iter().map(|v| v.to_string()))
        .chain(std::iter::once(m.n.to_string()))
        .collect();
    counts.rows.push(totals.clone());
    percent.rows.push(totals);
    vec![counts, percent]
}

pub fn render_experiment(report: &ExperimentReport, format: Format) -> String {
    let mut scores = Section::new("Classification evaluation", &["features", "method", "AUC", "CA", "F1", "Precision", "Recall"]);
    for (set, res) in [("without MAI", &report.without_mai), ("with MAI", &report.with_mai)] {
        for (method, m) in [("Random Forest", &res.random_forest), ("Naive Bayes", &res.naive_bayes)] {
            scores.rows.push(vec![
                set.into(),
                method.into(),
                f(m.auc, 3),
                f(m.ca, 3),
                f(m.f1, 3),
                f(m.precision, 3),
                f(m.recall, 3),
            ]);
        }
    }
    let mut delta = Section::new("CA change from adding MAI", &["method", "delta", "reference"]);
    let r = &report.reference;
    delta.rows.push(vec![
        "Random Forest".into(),
        f(report.forest_ca_delta, 3),
        format!("{:.3} -> {:.3}", r.forest_ca_without_mai, r.forest_ca_with_mai),
    ]);
    delta.rows.push(vec!["Naive Bayes".into(), f(report.naive_bayes_ca_delta, 3), "NA".into()]);
    let mut sections = vec![scores, delta];
    sections.extend(metrics_sections("Random Forest without MAI", &report.without_mai.random_forest));
    sections.extend(metrics_sections("Random Forest with MAI", &report.with_mai.random_forest));
    render_sections(report, &sections, format)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        let digest = Sha256::digest(&bytes);
        Ok(FileDigest { path: path.display().to_string(), sha256: digest.iter().map(|b| format!("{b:02x}")).collect() })
    }
}

/// Record of one CLI invocation. Outputs are listed with their digests so
/// each emitted file can be traced to the run that produced it.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub seed: Option<u64>,
    pub coefficients: Option<RefineCoeffs>,
    pub class_tables: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub counts: BTreeMap<String, serde_json::Value>,
}

impl RunManifest {
    pub fn count(&mut self, stage: &str, value: impl Serialize) {
        self.counts.insert(stage.to_string(), serde_json::to_value(value).expect("counts serialize"));
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        std::fs::write(path, s)?;
        Ok(())
    }
}
