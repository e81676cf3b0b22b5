//! Run artifacts: `series_*.csv`, `report.json`, `meta.json`.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use euler_lab_core::diagnostics::DecayReport;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, FORMAT_VERSION};

/// Columns of one time series, written with 17 significant digits.
#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.to_string(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("series_{}.csv", self.name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn render(&self, config: &ExperimentConfig) -> String {
        let mut out = String::new();
        writeln!(out, "# format={FORMAT_VERSION}").unwrap();
        writeln!(out, "# config={}", config.to_json()).unwrap();
        writeln!(out, "# {}", self.columns.join(",")).unwrap();
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(out, "{}", cells.join(",")).unwrap();
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Below,
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

/// One pass/fail comparison of a measured value against a configured threshold.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    pub fn new(name: &str, value: f64, relation: Relation, threshold: f64) -> Self {
        let passed = match relation {
            Relation::Below => value < threshold,
            Relation::AtMost => value <= threshold,
            Relation::AtLeast => value >= threshold,
        };
        Self { name: name.to_string(), value, relation, threshold, passed }
    }

    pub fn below(name: &str, value: f64, threshold: f64) -> Self {
        Self::new(name, value, Relation::Below, threshold)
    }

    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self::new(name, value, Relation::AtMost, threshold)
    }

    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self::new(name, value, Relation::AtLeast, threshold)
    }
}

/// A decay fit tied to the series it was fitted from.
#[derive(Debug, Clone)]
pub struct FitEntry {
    pub report: DecayReport,
    pub series: String,
}

/// Everything an experiment measured.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub series: Vec<Series>,
    pub fits: Vec<FitEntry>,
    /// Named scalar results: K_measured, contraction factors, spreads.
    pub measured: serde_json::Map<String, Value>,
    pub checks: Vec<Check>,
    /// Extra files, relative to the run directory.
    pub artifacts: Vec<String>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn measure(&mut self, key: &str, value: impl Into<Value>) {
        self.measured.insert(key.to_string(), value.into());
    }

    pub fn fit(&mut self, report: DecayReport, series: &str) {
        self.fits.push(FitEntry { report, series: series.to_string() });
    }

    pub fn check(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn series(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }

    pub fn fit_named(&self, quantity: &str) -> Option<&DecayReport> {
        self.fits.iter().map(|f| &f.report).find(|r| r.quantity == quantity)
    }

    pub fn check_named(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failure_json(&self, config: &ExperimentConfig) -> Value {
        json!({
            "kind": config.kind.name(),
            "seed": config.seed,
            "failures": self.failures(),
        })
    }
}

fn fit_json(entry: &FitEntry) -> Value {
    let r = &entry.report;
    let mut v = json!({
        "quantity": r.quantity,
        "rate": r.rate,
        "prefactor": r.prefactor,
        "window": [r.window.0, r.window.1],
        "residual": r.residual,
        "series_csv_path": format!("series_{}.csv", entry.series),
    });
    if let Some(k) = r.k_measured {
        v["K_measured"] = json!(k);
    }
    v
}

pub fn report_json(outcome: &Outcome, config: &ExperimentConfig) -> Value {
    json!({
        "format_version": FORMAT_VERSION,
        "kind": config.kind.name(),
        "config": config.to_json(),
        "reports": outcome.fits.iter().map(fit_json).collect::<Vec<_>>(),
        "measured": outcome.measured,
        "checks": outcome.checks,
        "passed": outcome.passed(),
    })
}

fn meta_json(outcome: &Outcome, config: &ExperimentConfig) -> Value {
    let mut files: Vec<String> = outcome.series.iter().map(Series::file_name).collect();
    files.push("report.json".into());
    files.extend(outcome.artifacts.iter().cloned());
    json!({
        "format_version": FORMAT_VERSION,
        "kind": config.kind.name(),
        "seed": config.seed,
        "config": config.to_json(),
        "scheme": "lawson-rk4",
        "files": files,
    })
}

fn write_json(path: &Path, value: &Value) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

/// Writes series, report and metadata into `<output_dir>/<kind>_<seed>/`.
pub fn write_outputs(outcome: &Outcome, config: &ExperimentConfig) -> io::Result<Vec<PathBuf>> {
    let dir = config.run_dir();
    fs::create_dir_all(&dir)?;
    let mut paths = Vec::new();
    for s in &outcome.series {
        let p = dir.join(s.file_name());
        fs::write(&p, s.render(config))?;
        paths.push(p);
    }
    let report = dir.join("report.json");
    write_json(&report, &report_json(outcome, config))?;
    paths.push(report);
    let meta = dir.join("meta.json");
    write_json(&meta, &meta_json(outcome, config))?;
    paths.push(meta);
    Ok(paths)
}
