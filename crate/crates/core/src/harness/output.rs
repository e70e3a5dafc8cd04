//! CSV tables with a `#`-prefixed metadata preamble.
//!
//! The body is a plain CSV and depends only on the inputs; floats are printed
//! in shortest round-trip form. The preamble records seed, parameters and
//! crate version.

use std::io::Write;
use std::path::Path;

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub metadata: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Shortest representation that parses back to the same `f64`; empty for NaN.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x}")
    }
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self {
            metadata: vec![("version".into(), env!("CARGO_PKG_VERSION").into())],
            header: header.iter().map(|s| s.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.metadata.push((key.into(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn body(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(w.into_inner().map_err(|e| e.into_error())?)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        for (k, v) in &self.metadata {
            writeln!(out, "# {k}: {v}")?;
        }
        out.extend(self.body()?);
        Ok(out)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

/// Splits a file written by [`Table::to_bytes`] into metadata lines and body.
pub fn split_preamble(text: &str) -> (Vec<&str>, &str) {
    let mut meta = Vec::new();
    let mut rest = text;
    while let Some(line) = rest.strip_prefix("# ") {
        let end = line.find('\n').map_or(line.len(), |k| k + 1);
        meta.push(line[..end].trim_end());
        rest = &line[end..];
    }
    (meta, rest)
}
