//! Run configuration: a single JSON document, with command-line flags
//! overriding individual fields.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use inflatrim::indices::TrimSpec;
use inflatrim::stats::SampleSpec;
use inflatrim::trends::TrendSpec;

use crate::CliError;

pub const OUTPUT_DIR_ENV: &str = "INFLATRIM_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridBounds {
    #[serde(default = "default_trim_bound")]
    pub alpha_max: u8,
    #[serde(default = "default_trim_bound")]
    pub beta_max: u8,
}

fn default_trim_bound() -> u8 {
    50
}

impl Default for GridBounds {
    fn default() -> Self {
        GridBounds {
            alpha_max: 50,
            beta_max: 50,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub input_path: Option<PathBuf>,
    #[serde(default)]
    pub tags_path: Option<PathBuf>,
    /// Optional official series (series-CSV schema) for replication reports.
    #[serde(default)]
    pub official_series_path: Option<PathBuf>,
    #[serde(default = "default_targets")]
    pub targets: Vec<TrendSpec>,
    /// Evaluation samples; empty means the full panel span.
    #[serde(default)]
    pub samples: Vec<SampleSpec>,
    #[serde(default)]
    pub grid: GridBounds,
    #[serde(default = "default_dm_level")]
    pub dm_level: f64,
    /// Per-target-label Diebold-Mariano bandwidth overrides.
    #[serde(default)]
    pub dm_bandwidth: BTreeMap<String, usize>,
    /// Tags excluded from the panel before any computation.
    #[serde(default)]
    pub exclusions: Vec<String>,
    /// Trim pairs treated as the official calibrations in comparisons.
    #[serde(default = "default_official_trims")]
    pub official_trims: Vec<TrimSpec>,
    /// Set sizes for top-k prediction ranges.
    #[serde(default = "default_top_k")]
    pub top_k: Vec<usize>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_targets() -> Vec<TrendSpec> {
    vec![
        TrendSpec::centered(),
        TrendSpec::future(),
        TrendSpec::forward(),
        TrendSpec::bandpass(),
    ]
}

fn default_dm_level() -> f64 {
    0.05
}

fn default_official_trims() -> Vec<TrimSpec> {
    vec![TrimSpec::official(), TrimSpec::official_alt()]
}

fn default_top_k() -> Vec<usize> {
    vec![50, 100]
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input_path: None,
            tags_path: None,
            official_series_path: None,
            targets: default_targets(),
            samples: Vec::new(),
            grid: GridBounds::default(),
            dm_level: default_dm_level(),
            dm_bandwidth: BTreeMap::new(),
            exclusions: Vec::new(),
            official_trims: default_official_trims(),
            top_k: default_top_k(),
            output_dir: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| {
            CliError::Config(format!("{}:{}: {e}", path.display(), e.line()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.targets.is_empty() {
            return Err(CliError::Config("at least one target is required".into()));
        }
        for t in &self.targets {
            t.validate()
                .map_err(|e| CliError::Config(e.to_string()))?;
        }
        for s in &self.samples {
            if s.start > s.end {
                return Err(CliError::Config(format!(
                    "sample start {} is after end {}",
                    s.start, s.end
                )));
            }
        }
        if !(self.dm_level > 0.0 && self.dm_level < 1.0) {
            return Err(CliError::Config(format!(
                "dm_level {} must lie in (0,1)",
                self.dm_level
            )));
        }
        if self.top_k.iter().any(|&k| k == 0) {
            return Err(CliError::Config("top_k entries must be positive".into()));
        }
        Ok(())
    }

    /// Bandwidth for DM tests against `target`: the configured override
    /// or the target's moving-average default.
    pub fn dm_bandwidth_for(&self, target: &TrendSpec) -> usize {
        self.dm_bandwidth
            .get(target.label())
            .copied()
            .unwrap_or_else(|| target.default_dm_bandwidth())
    }

    /// Output directory: config, then environment, then "out".
    pub fn resolved_output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| {
            std::env::var_os(OUTPUT_DIR_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("out"))
        })
    }
}

/// Parse "YYYY-MM:YYYY-MM" into a sample.
pub fn parse_sample(s: &str) -> Result<SampleSpec, CliError> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| CliError::Config(format!("sample {s:?}: expected START:END")))?;
    let start = a
        .trim()
        .parse()
        .map_err(|e| CliError::Config(format!("sample {s:?}: {e}")))?;
    let end = b
        .trim()
        .parse()
        .map_err(|e| CliError::Config(format!("sample {s:?}: {e}")))?;
    let spec = SampleSpec::new(start, end);
    if spec.start > spec.end {
        return Err(CliError::Config(format!("sample {s:?} is reversed")));
    }
    Ok(spec)
}

/// Parse "A,B" into a trim pair.
pub fn parse_trim(s: &str) -> Result<TrimSpec, CliError> {
    let err = || CliError::Config(format!("trim {s:?}: expected ALPHA,BETA in [0,50]"));
    let (a, b) = s.split_once(',').ok_or_else(err)?;
    let alpha: u8 = a.trim().parse().map_err(|_| err())?;
    let beta: u8 = b.trim().parse().map_err(|_| err())?;
    TrimSpec::new(alpha, beta).map_err(|_| err())
}

/// Parse a target label ("centered", "future", "forward", "bandpass"),
/// with the default calibration for that label.
pub fn parse_target(s: &str) -> Result<TrendSpec, CliError> {
    match s.trim() {
        "centered" => Ok(TrendSpec::centered()),
        "future" => Ok(TrendSpec::future()),
        "forward" => Ok(TrendSpec::forward()),
        "bandpass" => Ok(TrendSpec::bandpass()),
        other => Err(CliError::Config(format!(
            "unknown target {other:?}; use centered|future|forward|bandpass or a config file"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn round_trips_through_json() {
        let cfg = RunConfig::default();
        let json = serde_json::to_string_pretty(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back.targets, cfg.targets);
        assert_eq!(back.dm_level, cfg.dm_level);
        assert_eq!(back.official_trims, cfg.official_trims);
    }

    #[test]
    fn parses_full_document() {
        let json = r#"{
            "input_path": "panel.csv",
            "tags_path": "tags.csv",
            "targets": [
                {"kind": "centered", "window": 36},
                {"kind": "bandpass", "cutoff_period": 29}
            ],
            "samples": [{"start": "1970-01", "end": "2022-10"}],
            "grid": {"alpha_max": 50, "beta_max": 50},
            "dm_level": 0.05,
            "dm_bandwidth": {"centered": 35},
            "exclusions": ["owner_occ_housing"],
            "official_trims": [[24, 31]],
            "top_k": [50],
            "output_dir": "out"
        }"#;
        let cfg: RunConfig = serde_json::from_str(json).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.targets.len(), 2);
        assert_eq!(cfg.dm_bandwidth_for(&TrendSpec::centered()), 35);
        assert_eq!(cfg.dm_bandwidth_for(&TrendSpec::bandpass()), 38);
        assert_eq!(cfg.official_trims, vec![TrimSpec::official()]);
    }

    #[test]
    fn rejects_bad_values() {
        let mut cfg = RunConfig::default();
        cfg.dm_level = 1.5;
        assert!(cfg.validate().is_err());

        let json = r#"{"samples": [{"start": "2000-01", "end": "1999-01"}]}"#;
        let cfg: RunConfig = serde_json::from_str(json).unwrap();
        assert!(cfg.validate().is_err());

        assert!(serde_json::from_str::<RunConfig>(r#"{"unknown_field": 1}"#).is_err());
    }

    #[test]
    fn flag_parsers() {
        assert!(parse_sample("1970-01:2022-10").is_ok());
        assert!(parse_sample("2022-10:1970-01").is_err());
        assert!(parse_sample("1970-01").is_err());
        assert_eq!(parse_trim("24,31").unwrap(), TrimSpec::official());
        assert!(parse_trim("51,0").is_err());
        assert!(parse_target("centered").is_ok());
        assert!(parse_target("hp").is_err());
    }
}
