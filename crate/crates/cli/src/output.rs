//! Result documents: header metadata, warnings and named tables, written as
//! CSV or JSON.

use std::io::Write;
use std::path::Path;

use serde::ser::{Serialize, SerializeMap, Serializer};

use crate::config::OutputFormat;
use crate::error::CliResult;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl Cell {
    /// Floats carry 17 significant digits so that values round-trip.
    pub fn render(&self) -> String {
        match self {
            Cell::Float(x) if x.is_finite() => format!("{x:.16e}"),
            Cell::Float(x) if x.is_nan() => "NaN".into(),
            Cell::Float(x) if *x > 0.0 => "inf".into(),
            Cell::Float(_) => "-inf".into(),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cell::Float(x) if x.is_finite() => s.serialize_f64(*x),
            Cell::Float(_) => s.serialize_str(&self.render()),
            Cell::Int(i) => s.serialize_i64(*i),
            Cell::Text(t) => s.serialize_str(t),
            Cell::Bool(b) => s.serialize_bool(*b),
        }
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

/// Ordered key/value pairs, serialized as a JSON object in insertion order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Meta(pub Vec<(String, String)>);

impl Serialize for Meta {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            m.serialize_entry(k, v)?;
        }
        m.end()
    }
}

#[derive(Clone, Debug, Default, PartialEq, serde::Serialize)]
pub struct Document {
    pub meta: Meta,
    pub warnings: Vec<String>,
    pub tables: Vec<Table>,
}

impl Document {
    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.meta.0.push((key.into(), value.to_string()));
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// `# key: value` header lines, then `# warning:` lines, then each table
    /// preceded by `# table: name` and its column header.
    pub fn to_csv(&self) -> CliResult<Vec<u8>> {
        let mut out = Vec::new();
        for (k, v) in &self.meta.0 {
            writeln!(out, "# {k}: {v}")?;
        }
        for w in &self.warnings {
            writeln!(out, "# warning: {w}")?;
        }
        for t in &self.tables {
            writeln!(out, "# table: {}", t.name)?;
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
            w.write_record(&t.columns).map_err(csv_err)?;
            for row in &t.rows {
                w.write_record(row.iter().map(Cell::render)).map_err(csv_err)?;
            }
            out.extend(w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?);
        }
        Ok(out)
    }

    pub fn to_json(&self) -> CliResult<Vec<u8>> {
        let mut out = serde_json::to_vec_pretty(self).map_err(std::io::Error::other)?;
        out.push(b'\n');
        Ok(out)
    }

    pub fn render(&self, format: OutputFormat) -> CliResult<Vec<u8>> {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json(),
        }
    }
}

fn csv_err(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e.to_string())
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
