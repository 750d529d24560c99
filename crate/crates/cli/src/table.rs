//! CSV tables and the JSON run manifest.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value as Json;
use sha2::{Digest, Sha256};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// One typed CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    /// Shortest text that parses back to the same value.
    pub fn render(&self) -> String {
        match self {
            Cell::Float(x) => format!("{x:?}"),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Float(x) => Some(*x),
            Cell::Int(n) => Some(*n as f64),
            Cell::Text(_) => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<u64> for Cell {
    fn from(n: u64) -> Self {
        Cell::Int(n)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_owned())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

/// A named table written as `<name>.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub name: String,
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl ResultTable {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        ResultTable {
            name: name.into(),
            columns: columns.iter().map(|c| (*c).to_owned()).collect(),
            rows: Vec::new(),
        }
    }

    /// Appends a row.
    ///
    /// # Panics
    /// When the row width differs from the header.
    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width does not match the columns of `{}`",
            self.name
        );
        self.rows.push(row);
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    /// Column values as floats; `None` when the column is missing or textual.
    pub fn column_f64(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        self.rows.iter().map(|r| r[i].as_f64()).collect()
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn to_csv(&self) -> io::Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.into_inner().map_err(|e| e.into_error())
    }
}

/// Run metadata written next to the tables as `manifest.json`.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub preset: String,
    pub seed: u64,
    pub tool_version: String,
    pub scenario_hash: String,
    pub runtime_seconds: f64,
    pub parameters: Json,
    pub files: Vec<String>,
}

/// Hex SHA-256 of a canonical description.
pub fn digest_hex(canonical: &str) -> String {
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub name: String,
    pub seed: u64,
    pub scenario_hash: String,
    pub parameters: Json,
    pub tables: Vec<ResultTable>,
}

impl RunOutput {
    pub fn table(&self, name: &str) -> Option<&ResultTable> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn manifest(&self, runtime_seconds: f64) -> Manifest {
        Manifest {
            preset: self.name.clone(),
            seed: self.seed,
            tool_version: TOOL_VERSION.to_owned(),
            scenario_hash: self.scenario_hash.clone(),
            runtime_seconds,
            parameters: self.parameters.clone(),
            files: self.tables.iter().map(ResultTable::file_name).collect(),
        }
    }

    /// Writes every table and the manifest into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path, runtime_seconds: f64) -> io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::with_capacity(self.tables.len() + 1);
        for t in &self.tables {
            let path = dir.join(t.file_name());
            fs::write(&path, t.to_csv()?)?;
            written.push(path);
        }
        let path = dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(&self.manifest(runtime_seconds))?;
        text.push('\n');
        fs::write(&path, text)?;
        written.push(path);
        Ok(written)
    }

    /// Concatenated CSV bytes of all tables, for comparing runs.
    pub fn csv_fingerprint(&self) -> io::Result<String> {
        let mut out = String::new();
        for t in &self.tables {
            let bytes = t.to_csv()?;
            let _ = writeln!(out, "== {}", t.file_name());
            out.push_str(&String::from_utf8_lossy(&bytes));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_through_text() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 5e-324, 123456.789, -0.0, 1e22] {
            let s = Cell::Float(x).render();
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn csv_has_header_and_rows() {
        let mut t = ResultTable::new("t", &["a", "b"]);
        t.push(vec![1.5.into(), "x,y".into()]);
        let text = String::from_utf8(t.to_csv().unwrap()).unwrap();
        assert_eq!(text, "a,b\r\n1.5,\"x,y\"\r\n");
    }

    #[test]
    #[should_panic(expected = "row width")]
    fn ragged_rows_are_rejected() {
        let mut t = ResultTable::new("t", &["a", "b"]);
        t.push(vec![1.0.into()]);
    }

    #[test]
    fn digest_is_stable_hex() {
        let d = digest_hex("abc");
        assert_eq!(d, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
