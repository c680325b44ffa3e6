//! Deterministic CSV/JSON artifacts and their run manifests.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use magres::field::FieldSpec;
use serde::{Deserialize, Serialize};

/// Everything needed to rerun a command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub field: Option<FieldSpec>,
    /// Resolved command arguments, including grids, angles and tolerances.
    pub solver: serde_json::Value,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
    }
}

/// 15 significant digits in scientific notation.
pub fn num(x: f64) -> String {
    format!("{x:.14e}")
}

/// A table plus optional comment lines after the rows.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub trailer: Vec<String>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
            trailer: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    fn render(&self, manifest: &str) -> Result<Vec<u8>> {
        let mut bytes = format!("# manifest: {manifest}\n").into_bytes();
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(&self.header)?;
        for row in &self.rows {
            writer.write_record(row)?;
        }
        bytes.extend(writer.into_inner().context("flushing CSV")?);
        for line in &self.trailer {
            bytes.extend(format!("# {line}\n").into_bytes());
        }
        Ok(bytes)
    }
}

/// Where a run's artifacts go: a CSV path (with sibling JSON files and a
/// manifest) or standard output.
pub struct Sink {
    out: Option<PathBuf>,
}

impl Sink {
    pub fn new(out: Option<PathBuf>) -> Self {
        Self { out }
    }

    fn sibling(&self, suffix: &str) -> Option<PathBuf> {
        self.out.as_ref().map(|p| p.with_extension(suffix))
    }

    /// Write the table, the companion JSON documents and the manifest.
    pub fn emit(
        &self,
        table: &Table,
        companions: &[(&str, serde_json::Value)],
        command: &str,
        field: Option<&FieldSpec>,
        solver: serde_json::Value,
    ) -> Result<()> {
        let Some(out) = &self.out else {
            let bytes = table.render("none")?;
            print!("{}", String::from_utf8(bytes)?);
            for (_, value) in companions {
                eprintln!("{}", serde_json::to_string_pretty(value)?);
            }
            return Ok(());
        };
        let manifest_path = self.sibling("manifest.json").expect("out path set");
        let mut outputs = vec![file_name(out)];
        std::fs::write(out, table.render(&file_name(&manifest_path))?)
            .with_context(|| format!("writing {}", out.display()))?;
        for (suffix, value) in companions {
            let path = self.sibling(&format!("{suffix}.json")).expect("out path set");
            std::fs::write(&path, serde_json::to_string_pretty(value)? + "\n")
                .with_context(|| format!("writing {}", path.display()))?;
            outputs.push(file_name(&path));
        }
        let manifest = RunManifest {
            command: command.to_string(),
            field: field.cloned(),
            solver,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            outputs,
        };
        std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)? + "\n")
            .with_context(|| format!("writing {}", manifest_path.display()))?;
        Ok(())
    }
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}
