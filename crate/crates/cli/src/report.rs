use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// One table entry. Non-finite numbers become `null` in JSON and an empty
/// field in CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as u64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl Cell {
    fn csv_field(&self) -> String {
        match self {
            Cell::Num(x) if x.is_finite() => serde_json::to_string(x).expect("finite float"),
            Cell::Num(_) => String::new(),
            Cell::Int(x) => x.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

/// The tabular series, one row per horizon or grid size.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv_field))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Assertion {
    pub fn new(name: &str, passed: bool, detail: String) -> Self {
        Assertion {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// Everything one command produces.
#[derive(Debug, Clone)]
pub struct ReportBundle {
    pub config: RunConfig,
    pub values: Value,
    pub table: Table,
    pub assertions: Vec<Assertion>,
    /// Reported on stderr only, so that the files stay reproducible.
    pub wall_time: Duration,
}

impl ReportBundle {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn to_json_value(&self) -> Value {
        json!({
            "schema_version": SCHEMA_VERSION,
            "tool": "fouberry",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.config.command.name(),
            "seed": self.config.seed,
            "inputs": self.config,
            "values": self.values,
            "series": self.table,
            "assertions": self.assertions,
            "passed": self.passed(),
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json_value()).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        self.table.to_csv()
    }

    /// Writes `<command>.json` and `<command>.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf), CliError> {
        std::fs::create_dir_all(dir)?;
        let stem = self.config.command.name();
        let json_path = dir.join(format!("{stem}.json"));
        let csv_path = dir.join(format!("{stem}.csv"));
        std::fs::write(&json_path, self.to_json())?;
        std::fs::write(&csv_path, self.to_csv()?)?;
        Ok((json_path, csv_path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_and_formats_like_json() {
        let mut t = Table::new(&["name", "x", "n", "ok"]);
        t.push(vec!["a,b".into(), 0.1.into(), 3usize.into(), true.into()]);
        t.push(vec!["plain".into(), f64::NAN.into(), 0usize.into(), false.into()]);
        t.push(vec!["tiny".into(), 1e-87.into(), 1usize.into(), false.into()]);
        let csv = t.to_csv().unwrap();
        assert_eq!(csv, "name,x,n,ok\n\"a,b\",0.1,3,true\nplain,,0,false\ntiny,1e-87,1,false\n");
        let j = serde_json::to_string(&t).unwrap();
        assert!(j.contains("[\"plain\",null,0,false]"));
        assert!(j.contains("1e-87"));
    }
}
