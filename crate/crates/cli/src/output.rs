//! Results table and run manifest writers.
//!
//! Numeric CSV cells carry 17 significant digits so reruns can be compared
//! byte for byte.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliResult;

#[derive(Debug, Clone)]
pub enum Cell {
    Str(String),
    UInt(u64),
    Float(f64),
    Bool(bool),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Str(s) => s.clone(),
            Cell::UInt(v) => v.to_string(),
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub seed: u64,
    pub package_version: String,
    pub wall_time_seconds: f64,
    pub config: serde_json::Value,
    pub summary: serde_json::Value,
}

/// Writes `results.csv` and `manifest.json` into the output directory,
/// creating it if needed. Returns the CSV path.
pub fn write_outputs(out_dir: &Path, table: &Table, manifest: &Manifest) -> CliResult<PathBuf> {
    std::fs::create_dir_all(out_dir)?;
    let csv_path = out_dir.join("results.csv");
    std::fs::write(&csv_path, table.to_csv_string())?;
    let manifest_path = out_dir.join("manifest.json");
    let json = serde_json::to_string_pretty(manifest)
        .map_err(|e| crate::error::CliError::Runtime(e.to_string()))?;
    std::fs::write(manifest_path, json + "\n")?;
    Ok(csv_path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_render_with_full_precision() {
        let mut t = Table::new(vec!["a", "b"]);
        t.push(vec![Cell::Float(1.0 / 3.0), Cell::UInt(7)]);
        let csv = t.to_csv_string();
        assert!(csv.starts_with("a,b\n"));
        assert!(csv.contains("3.3333333333333331e-1"), "{csv}");
        assert!(csv.contains(",7\n"));
    }
}
