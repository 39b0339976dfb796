use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

/// Numeric table written as metrics.csv; values use a fixed exponent format so reruns are byte-identical.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory csv");
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format!("{v:.12e}"))).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("ascii csv")
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub experiment: String,
    pub pass: bool,
    pub fitted: Map<String, Value>,
    pub tolerances: Map<String, Value>,
    pub table: Table,
    pub notes: Vec<String>,
}

impl Outcome {
    pub fn new(experiment: &str, table: Table) -> Self {
        Self {
            experiment: experiment.to_string(),
            pass: false,
            fitted: Map::new(),
            tolerances: Map::new(),
            table,
            notes: Vec::new(),
        }
    }

    pub fn fitted(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.fitted.insert(key.to_string(), value.into());
        self
    }

    pub fn tolerance(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.tolerances.insert(key.to_string(), value.into());
        self
    }

    pub fn note(&mut self, text: impl Into<String>) -> &mut Self {
        self.notes.push(text.into());
        self
    }

    /// Failed verdict carrying the error that stopped the experiment.
    pub fn failed(experiment: &str, error: &str) -> Self {
        let mut o = Self::new(experiment, Table::default());
        o.fitted("error", error);
        o
    }

    pub fn verdict_json(&self) -> Value {
        json!({
            "experiment": self.experiment,
            "pass": self.pass,
            "fitted": self.fitted,
            "tolerances": self.tolerances,
        })
    }

    /// Writes results/<name>/{metrics.csv, verdict.json, meta.json} under `root`.
    pub fn write(&self, root: &Path, meta: &Value) -> io::Result<PathBuf> {
        let dir = root.join("results").join(&self.experiment);
        fs::create_dir_all(&dir)?;
        fs::write(dir.join("metrics.csv"), self.table.to_csv())?;
        fs::write(dir.join("verdict.json"), pretty(&self.verdict_json()))?;
        let mut meta = meta.clone();
        if let Value::Object(m) = &mut meta {
            m.insert("notes".into(), json!(self.notes));
        }
        fs::write(dir.join("meta.json"), pretty(&meta))?;
        Ok(dir)
    }
}

pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}
