//! Versioned run reports.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::config::RunConfig;
use crate::seeds::Provenance;

pub const REPORT_SCHEMA: &str = "rpfield-report/1";

/// One numeric result. Either `exact` is set or `std_error` is present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub name: String,
    pub value: f64,
    pub std_error: Option<f64>,
    pub exact: bool,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub details: Map<String, Value>,
}

impl Item {
    pub fn exact(name: impl Into<String>, value: f64) -> Self {
        Item {
            name: name.into(),
            value,
            std_error: None,
            exact: true,
            details: Map::new(),
        }
    }

    pub fn estimate(name: impl Into<String>, value: f64, std_error: f64) -> Self {
        Item {
            name: name.into(),
            value,
            std_error: Some(std_error),
            exact: false,
            details: Map::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        self.details
            .insert(key.into(), serde_json::to_value(value).expect("detail serializes"));
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub check: String,
    pub parameters: Value,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Verdict {
    /// Passes when `statistic <= threshold`.
    pub fn at_most(check: impl Into<String>, parameters: Value, statistic: f64, threshold: f64) -> Self {
        Verdict {
            check: check.into(),
            parameters,
            statistic,
            threshold,
            pass: statistic <= threshold,
        }
    }

    /// Passes when `statistic >= threshold`.
    pub fn at_least(check: impl Into<String>, parameters: Value, statistic: f64, threshold: f64) -> Self {
        Verdict {
            check: check.into(),
            parameters,
            statistic,
            threshold,
            pass: statistic >= threshold,
        }
    }

    /// Boolean outcome, reported as statistic 1 or 0 against threshold 1.
    pub fn flag(check: impl Into<String>, parameters: Value, pass: bool) -> Self {
        Verdict {
            check: check.into(),
            parameters,
            statistic: if pass { 1.0 } else { 0.0 },
            threshold: 1.0,
            pass,
        }
    }
}

/// Rows of a plot-ready table; every row has the same keys, in column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub rows: Vec<Map<String, Value>>,
}

impl Table {
    pub fn from_rows<T: Serialize>(name: impl Into<String>, rows: &[T]) -> Self {
        Table {
            name: name.into(),
            rows: rows
                .iter()
                .map(|r| match serde_json::to_value(r).expect("row serializes") {
                    Value::Object(m) => m,
                    other => panic!("table row is not an object: {other}"),
                })
                .collect(),
        }
    }

    pub fn columns(&self) -> Vec<String> {
        self.rows.first().map(|r| r.keys().cloned().collect()).unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub started_unix: f64,
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub command: String,
    pub config: RunConfig,
    pub results: Vec<Item>,
    pub verdicts: Vec<Verdict>,
    /// Conjunction of all verdicts.
    pub pass: bool,
    #[serde(default)]
    pub tables: Vec<Table>,
    /// Files written by the command itself, relative to the output
    /// directory.
    #[serde(default)]
    pub files: Vec<String>,
    pub provenance: Provenance,
    pub threads: usize,
    pub timing: Timing,
}

impl Report {
    /// Everything except timing, for determinism comparisons.
    pub fn payload(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Value::Object(m) = &mut v {
            m.remove("timing");
        }
        v
    }
}
