//! Table serialization: CSV with a trailing metadata comment, plus a JSON
//! mirror of the same content. Output is byte-deterministic for a given
//! input: floats use Rust's shortest round-trip formatting and every
//! collection is emitted in stored order. Files are written atomically
//! (temp file + rename).

use std::path::Path;

use anyhow::{Context, Result};
use sha2::{Digest, Sha256};

/// One table cell.
#[derive(Debug, Clone)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
    Empty,
}

impl Cell {
    fn to_csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => format!("{v}"),
            Cell::Text(v) => {
                debug_assert!(!v.contains(','), "cell text must stay comma-free");
                v.clone()
            }
            Cell::Empty => String::new(),
        }
    }

    fn to_json(&self) -> serde_json::Value {
        match self {
            Cell::Int(v) => serde_json::Value::from(*v),
            Cell::Num(v) => serde_json::Number::from_f64(*v)
                .map(serde_json::Value::Number)
                .unwrap_or(serde_json::Value::Null),
            Cell::Text(v) => serde_json::Value::String(v.clone()),
            Cell::Empty => serde_json::Value::Null,
        }
    }
}

/// A rectangular report table.
#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row arity mismatch");
        self.rows.push(row);
    }
}

/// Provenance recorded at the bottom of every artifact.
#[derive(Debug, Clone)]
pub struct Meta {
    /// Euler segments, where applicable.
    pub segments: Option<usize>,
    /// SHA-256 of the input data file.
    pub input_sha256: String,
    /// Extra comment lines (warnings, assumption notes).
    pub notes: Vec<String>,
}

impl Meta {
    fn comment_line(&self) -> String {
        let mut line = format!(
            "# tool=dsd version={}",
            env!("CARGO_PKG_VERSION")
        );
        if let Some(n) = self.segments {
            line.push_str(&format!(" segments={n}"));
        }
        line.push_str(&format!(" input_sha256={}", self.input_sha256));
        line
    }
}

/// Hex SHA-256 of a file's bytes.
pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)
        .with_context(|| format!("reading {} for hashing", path.display()))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(format!("{:x}", hasher.finalize()))
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    std::fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

/// Write `<stem>.csv` under `dir`.
pub fn write_csv(dir: &Path, stem: &str, table: &Table, meta: &Meta) -> Result<()> {
    let mut out = table.columns.join(",");
    out.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(Cell::to_csv).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    for note in &meta.notes {
        out.push_str(&format!("# {note}\n"));
    }
    out.push_str(&meta.comment_line());
    out.push('\n');
    write_atomic(&dir.join(format!("{stem}.csv")), &out)
}

/// Write `<stem>.json` under `dir`, mirroring the CSV one-to-one.
pub fn write_json(dir: &Path, stem: &str, table: &Table, meta: &Meta) -> Result<()> {
    let rows: Vec<serde_json::Value> = table
        .rows
        .iter()
        .map(|row| serde_json::Value::Array(row.iter().map(Cell::to_json).collect()))
        .collect();
    let mut meta_obj = serde_json::Map::new();
    meta_obj.insert("tool".into(), "dsd".into());
    meta_obj.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    if let Some(n) = meta.segments {
        meta_obj.insert("segments".into(), serde_json::Value::from(n));
    }
    meta_obj.insert("input_sha256".into(), meta.input_sha256.clone().into());
    if !meta.notes.is_empty() {
        meta_obj.insert(
            "notes".into(),
            serde_json::Value::Array(
                meta.notes.iter().map(|n| n.clone().into()).collect(),
            ),
        );
    }
    let doc = serde_json::json!({
        "meta": serde_json::Value::Object(meta_obj),
        "columns": table.columns,
        "rows": rows,
    });
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    write_atomic(&dir.join(format!("{stem}.json")), &text)
}
