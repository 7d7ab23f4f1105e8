//! Tabular output for experiment records: CSV with a header row, or JSON
//! as one metadata object plus a records array.

use crate::error::{Error, Result};
use crate::experiments::{ConvergenceRecord, OrthonormalityRecord};
use serde_json::{json, Map, Value};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::invalid(format!("unknown format '{other}'"))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

/// Column-named rows with run-level metadata. Values keep their JSON types
/// so numbers stay numbers in JSON output and print compactly in CSV.
#[derive(Clone, Debug, Default)]
pub struct RecordSet {
    pub metadata: Vec<(String, Value)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl RecordSet {
    pub fn new(columns: &[&str]) -> Self {
        RecordSet {
            metadata: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(mut self, key: &str, value: Value) -> Self {
        self.metadata.push((key.to_string(), value));
        self
    }

    pub fn push_row(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width mismatch");
        self.rows.push(row);
    }

    /// Header row, then one line per record. Metadata is not part of the
    /// CSV body; readers that need it should ask for JSON.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(csv_cell).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let metadata: Map<String, Value> = self.metadata.iter().cloned().collect();
        let records: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .columns
                    .iter()
                    .cloned()
                    .zip(row.iter().cloned())
                    .collect();
                Value::Object(obj)
            })
            .collect();
        json!({ "metadata": Value::Object(metadata), "records": records })
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => {
                let mut s = serde_json::to_string_pretty(&self.to_json())
                    .expect("record sets are plain data");
                s.push('\n');
                s
            }
        }
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// Finite floats become JSON numbers with shortest round-trip text;
/// non-finite values are not representable and become null.
pub fn float_value(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

pub fn convergence_records(records: &[ConvergenceRecord]) -> RecordSet {
    let mut set = RecordSet::new(&[
        "n",
        "m",
        "omega",
        "norm_error",
        "censored",
        "fitted_slope",
        "prefactor",
    ]);
    for r in records {
        set.push_row(vec![
            json!(r.n),
            json!(r.m),
            float_value(r.omega),
            float_value(r.norm_error),
            json!(r.censored),
            r.fitted_slope.map_or(Value::Null, float_value),
            r.prefactor.map_or(Value::Null, float_value),
        ]);
    }
    set
}

pub fn orthonormality_records(records: &[OrthonormalityRecord]) -> RecordSet {
    let mut set = RecordSet::new(&["omega", "max_deviation", "state_a", "state_b"]);
    for r in records {
        set.push_row(vec![
            float_value(r.omega),
            float_value(r.max_deviation),
            json!(r.worst_pair.0),
            json!(r.worst_pair.1),
        ]);
    }
    set
}
