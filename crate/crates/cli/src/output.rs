//! CSV tables with a `#` header block and the JSON run manifest.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::CliError;

/// Version of the CSV layout and manifest schema.
pub const SCHEMA_VERSION: u32 = 1;

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

/// Formats a number with 17 significant digits so that it round-trips exactly.
pub fn format_number(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn format_cell(c: &Cell) -> String {
    match c {
        Cell::Num(x) => format_number(*x),
        Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Cell::Text(s) => s.clone(),
    }
}

/// A named data table; every table carries a `method` column.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// CSV text with the header block.
    pub fn render(&self, command: &str, config_hash: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# schema_version: {SCHEMA_VERSION}");
        let _ = writeln!(out, "# config_sha256: {config_hash}");
        let _ = writeln!(out, "# command: {command}");
        let _ = writeln!(out, "# generator: {}", openbath::scaling::METHOD_VERSION);
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(format_cell).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, dir: &Path, command: &str, config_hash: &str) -> Result<String, CliError> {
        let file = format!("{}.csv", self.name);
        std::fs::write(dir.join(&file), self.render(command, config_hash))?;
        Ok(file)
    }
}

/// Sidecar manifest of a run.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub command: String,
    pub generator: String,
    pub config_sha256: String,
    pub config: serde_json::Value,
    pub tolerance_profile: String,
    pub seed_grid: bool,
    pub threads: usize,
    pub files: Vec<String>,
    pub summary: Vec<(String, String)>,
    pub failures: Vec<String>,
    pub elapsed_seconds: f64,
}
