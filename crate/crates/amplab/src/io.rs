//! Artifact files: CSV tables, JSON documents and the output directory.
//!
//! CSV: comma separated, one header line, `\n` line endings, floats printed
//! with 17 significant digits in scientific notation (`{:.16e}`), which
//! round-trips every f64. JSON: pretty-printed by serde_json, keys in
//! declaration order, trailing newline.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use amplab_core::linalg::Mat;
use anyhow::{bail, Context, Result};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// A CSV table built row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(headers: impl IntoIterator<Item = S>) -> Self {
        Self {
            headers: headers.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.headers.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn push_floats(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&x| fmt_f64(x)).collect());
    }

    /// One column per slice; all columns must have the same length.
    pub fn from_columns(headers: &[String], columns: &[&[f64]]) -> Self {
        let mut t = Self::new(headers.iter().cloned());
        let n = columns.first().map_or(0, |c| c.len());
        for i in 0..n {
            t.push(columns.iter().map(|c| fmt_f64(c[i])).collect());
        }
        t
    }

    pub fn from_matrix(m: &Mat) -> Self {
        let mut t = Self::new((1..=m.cols).map(|j| format!("c{j}")));
        for i in 0..m.rows {
            t.push_floats(m.row(i));
        }
        t
    }

    pub fn render(&self) -> String {
        let mut s = self.headers.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Output directory that remembers every file written through it.
#[derive(Debug)]
pub struct ArtifactDir {
    root: PathBuf,
    written: BTreeSet<String>,
}

impl ArtifactDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: BTreeSet::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Writes `contents` at the relative path `rel` (forward slashes).
    pub fn write(&mut self, rel: &str, contents: &str) -> Result<()> {
        if rel.is_empty() || rel.starts_with('/') || rel.split('/').any(|c| c == ".." || c.is_empty()) {
            bail!("invalid artifact path {rel:?}");
        }
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.written.insert(rel.to_string());
        Ok(())
    }

    pub fn write_table(&mut self, rel: &str, table: &Table) -> Result<()> {
        self.write(rel, &table.render())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, rel: &str, value: &T) -> Result<()> {
        self.write(rel, &to_json(value)?)
    }

    /// Relative paths written so far, sorted.
    pub fn files(&self) -> impl Iterator<Item = &str> {
        self.written.iter().map(String::as_str)
    }
}
