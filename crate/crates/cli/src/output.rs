//! CSV and manifest writers. Every numeric field is printed with 10
//! significant digits so outputs are meaningful as golden files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::CliError;

/// Format with 10 significant digits in plain decimal.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (9 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Optional numeric field (empty when absent).
pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_sig).unwrap_or_default()
}

/// A CSV file being accumulated in memory and flushed atomically.
pub struct CsvOut {
    path: PathBuf,
    buffer: String,
    rows: usize,
}

impl CsvOut {
    pub fn new(dir: &Path, name: &str, header: &str) -> Self {
        CsvOut {
            path: dir.join(name),
            buffer: format!("{header}\n"),
            rows: 0,
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.buffer.push_str(&fields.join(","));
        self.buffer.push('\n');
        self.rows += 1;
    }

    pub fn finish(self) -> Result<OutputEntry, CliError> {
        fs::write(&self.path, &self.buffer)
            .map_err(|e| CliError::Internal(format!("write {}: {e}", self.path.display())))?;
        Ok(OutputEntry {
            path: self.path.display().to_string(),
            rows: self.rows,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputEntry {
    pub path: String,
    pub rows: usize,
}

/// JSON run manifest: the config echo plus output inventory fully
/// determine the run, and contain nothing volatile, so reruns are
/// byte-identical.
#[derive(Serialize)]
pub struct Manifest<'a> {
    pub command: &'a str,
    pub version: &'a str,
    pub config: &'a RunConfig,
    pub outputs: Vec<OutputEntry>,
    #[serde(skip_serializing_if = "serde_json::Map::is_empty")]
    pub notes: serde_json::Map<String, serde_json::Value>,
}

impl<'a> Manifest<'a> {
    pub fn new(command: &'a str, config: &'a RunConfig) -> Self {
        Manifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            config,
            outputs: Vec::new(),
            notes: serde_json::Map::new(),
        }
    }

    pub fn note(&mut self, key: &str, value: serde_json::Value) {
        self.notes.insert(key.to_string(), value);
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let path = dir.join(format!("{}_manifest.json", self.command));
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Internal(format!("manifest: {e}")))?;
        fs::write(&path, text + "\n")
            .map_err(|e| CliError::Internal(format!("write {}: {e}", path.display())))?;
        Ok(())
    }
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Internal(format!("create {}: {e}", dir.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_significant_digits() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(7.3), "7.300000000");
        assert_eq!(fmt_sig(-7.3), "-7.300000000");
        assert_eq!(fmt_sig(1234.5678), "1234.567800");
        assert_eq!(fmt_sig(0.001234), "0.001234000000");
        assert_eq!(fmt_sig(100.0), "100.0000000");
        assert_eq!(fmt_opt(None), "");
    }
}
