//! CSV result tables and reproducibility manifests.
//!
//! CSV files carry a leading '#'-prefixed metadata comment block, then an
//! RFC-4180 header row and data rows. Every float is written in Rust's
//! shortest round-trippable decimal form, so downstream plotting loses
//! nothing. Manifests are canonical config documents; re-running one
//! reproduces its CSV byte for byte.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::{Provenance, RunConfig};
use crate::{Error, Result};

/// A rectangular result table with a fixed schema and a metadata block.
#[derive(Debug, Clone, Default)]
pub struct ResultTable {
    pub metadata: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl ResultTable {
    pub fn new(header: &[&str]) -> Self {
        ResultTable {
            metadata: Vec::new(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl std::fmt::Display) {
        self.metadata.push((key.to_string(), value.to_string()));
    }

    pub fn push_row(&mut self, row: Vec<String>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(Error::domain(format!(
                "row width {} does not match header width {}",
                row.len(),
                self.header.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    /// Render to CSV text (deterministic; no timestamps).
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k}: {v}");
        }
        let _ = writeln!(
            out,
            "{}",
            self.header
                .iter()
                .map(|h| csv_field(h))
                .collect::<Vec<_>>()
                .join(",")
        );
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{}",
                row.iter()
                    .map(|c| csv_field(c))
                    .collect::<Vec<_>>()
                    .join(",")
            );
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// RFC-4180 quoting: fields containing comma, quote, or newline are quoted,
/// with inner quotes doubled.
pub fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') || s.contains('\r') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Shortest decimal that parses back to exactly the same f64 ('.' separator).
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x}")
    }
}

/// Write the manifest: the canonical config with provenance attached.
pub fn write_manifest(
    path: &Path,
    canonical: &RunConfig,
    provenance: Provenance,
    derived: &[(String, String)],
) -> Result<()> {
    let mut doc = canonical.clone();
    doc.provenance = Some(provenance);
    let mut text = String::new();
    for (k, v) in derived {
        let _ = writeln!(text, "# derived: {k} = {v}");
    }
    text.push_str(&doc.to_toml_string()?);
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Output paths for one run part.
#[derive(Debug, Clone)]
pub struct PartPaths {
    pub csv: PathBuf,
    pub manifest: PathBuf,
}

pub fn part_paths(directory: &str, stem: &str) -> PartPaths {
    let dir = Path::new(directory);
    PartPaths {
        csv: dir.join(format!("{stem}.csv")),
        manifest: dir.join(format!("{stem}.manifest.toml")),
    }
}
