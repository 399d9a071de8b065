//! Report and table files, each written atomically.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use rpfield::free_measure::write_atomic;

use crate::config::OutputFormat;
use crate::error::CliError;
use crate::report::{Report, Table};

fn io(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn put(path: PathBuf, bytes: &[u8], written: &mut Vec<PathBuf>) -> Result<(), CliError> {
    write_atomic(&path, bytes).map_err(|e| io(&path, e))?;
    written.push(path);
    Ok(())
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn csv_bytes<F>(fill: F) -> Result<Vec<u8>, CliError>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    fill(&mut w).map_err(|e| CliError::Io(e.to_string()))?;
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

pub fn table_csv(table: &Table) -> Result<Vec<u8>, CliError> {
    let columns = table.columns();
    csv_bytes(|w| {
        w.write_record(&columns)?;
        for row in &table.rows {
            w.write_record(columns.iter().map(|c| row.get(c).map(cell).unwrap_or_default()))?;
        }
        Ok(())
    })
}

#[derive(Serialize)]
struct ResultRow<'a> {
    name: &'a str,
    value: f64,
    std_error: Option<f64>,
    exact: bool,
}

#[derive(Serialize)]
struct VerdictRow<'a> {
    check: &'a str,
    statistic: f64,
    threshold: f64,
    pass: bool,
}

/// Writes `report.json` and/or `results.csv`, `verdicts.csv` and one
/// `<table>.csv` per table into `dir`; returns the written paths.
pub fn write_outputs(report: &Report, dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut written = Vec::new();
    if format.json() {
        let text = serde_json::to_string_pretty(report).map_err(|e| CliError::Io(e.to_string()))?;
        put(dir.join("report.json"), text.as_bytes(), &mut written)?;
    }
    if format.csv() {
        let results = csv_bytes(|w| {
            for r in &report.results {
                w.serialize(ResultRow {
                    name: &r.name,
                    value: r.value,
                    std_error: r.std_error,
                    exact: r.exact,
                })?;
            }
            Ok(())
        })?;
        put(dir.join("results.csv"), &results, &mut written)?;
        let verdicts = csv_bytes(|w| {
            for v in &report.verdicts {
                w.serialize(VerdictRow {
                    check: &v.check,
                    statistic: v.statistic,
                    threshold: v.threshold,
                    pass: v.pass,
                })?;
            }
            Ok(())
        })?;
        put(dir.join("verdicts.csv"), &verdicts, &mut written)?;
        for t in &report.tables {
            put(dir.join(format!("{}.csv", t.name)), &table_csv(t)?, &mut written)?;
        }
    }
    Ok(written)
}
