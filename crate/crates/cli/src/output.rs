//! CSV/JSON rendering and atomic file output.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::{Format, RunConfig};
use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Named columns sharing one row count, plus scalar summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<(String, Vec<f64>)>,
    pub summary: Vec<(String, f64)>,
}

impl Table {
    pub fn new() -> Self {
        Self { columns: Vec::new(), summary: Vec::new() }
    }

    pub fn push_column(&mut self, name: impl Into<String>, values: Vec<f64>) {
        debug_assert!(self.columns.first().is_none_or(|(_, c)| c.len() == values.len()));
        self.columns.push((name.into(), values));
    }

    #[cfg(test)]
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_slice())
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, |(_, c)| c.len())
    }
}

impl Default for Table {
    fn default() -> Self {
        Self::new()
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn config_entries(config: &RunConfig) -> Map<String, Value> {
    match serde_json::to_value(config).expect("config serializes") {
        Value::Object(m) => m,
        _ => unreachable!("RunConfig is a struct"),
    }
}

pub fn render_csv(config: &RunConfig, table: &Table) -> String {
    let mut out = String::new();
    writeln!(out, "# lossyjc {VERSION}").unwrap();
    for (k, v) in config_entries(config) {
        let v = match v {
            Value::String(s) => s,
            other => other.to_string(),
        };
        writeln!(out, "# {k}: {v}").unwrap();
    }
    let names: Vec<&str> = table.columns.iter().map(|(n, _)| n.as_str()).collect();
    writeln!(out, "{}", names.join(",")).unwrap();
    for r in 0..table.rows() {
        let row: Vec<String> = table.columns.iter().map(|(_, c)| num(c[r])).collect();
        writeln!(out, "{}", row.join(",")).unwrap();
    }
    for (k, v) in &table.summary {
        writeln!(out, "# {k}: {}", num(*v)).unwrap();
    }
    out
}

#[derive(Serialize)]
struct JsonDoc<'a> {
    version: &'a str,
    config: &'a RunConfig,
    columns: Vec<&'a str>,
    rows: Vec<Map<String, Value>>,
    summary: Map<String, Value>,
}

pub fn render_json(config: &RunConfig, table: &Table) -> String {
    let rows = (0..table.rows())
        .map(|r| {
            table
                .columns
                .iter()
                .map(|(n, c)| (n.clone(), Value::from(c[r])))
                .collect()
        })
        .collect();
    let doc = JsonDoc {
        version: VERSION,
        config,
        columns: table.columns.iter().map(|(n, _)| n.as_str()).collect(),
        rows,
        summary: table.summary.iter().map(|(k, v)| (k.clone(), Value::from(*v))).collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("document serializes");
    s.push('\n');
    s
}

pub fn render(config: &RunConfig, table: &Table) -> String {
    match config.format {
        Format::Csv => render_csv(config, table),
        Format::Json => render_json(config, table),
    }
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let io = |source| CliError::Io { path: path.display().to_string(), source };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
