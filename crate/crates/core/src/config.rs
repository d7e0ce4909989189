//! Run configuration loaded from TOML or JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::backtest::{ModelConfig, SimSettings};
use crate::features::DelDriftMode;
use crate::ingest::MonthId;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data_dir: PathBuf,
    pub symbol: String,
    /// First month to load; the earliest file when absent.
    pub start: Option<MonthId>,
    /// Last month to load; the latest file when absent.
    pub end: Option<MonthId>,
    /// Rolling window n in hours.
    pub window: usize,
    pub lookback_hours: usize,
    /// Largest tolerated run of missing hours between consecutive months.
    pub max_gap_hours: i64,
    /// Reject OHLC-inconsistent rows instead of dropping them.
    pub strict: bool,
    pub del_drift_mode: DelDriftMode,
    pub histogram_bins: usize,
    pub sim: SimSettings,
    pub models: ModelConfig,
    /// Write the fitted models next to the backtest outputs.
    pub save_models: bool,
    pub output_dir: PathBuf,
    /// Worker thread cap; all cores when absent.
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data_dir: PathBuf::from("data"),
            symbol: "BTCUSDT".into(),
            start: None,
            end: None,
            window: 60,
            lookback_hours: 60,
            max_gap_hours: 72,
            strict: true,
            del_drift_mode: DelDriftMode::DriftDifference,
            histogram_bins: 50,
            sim: SimSettings::default(),
            models: ModelConfig::default(),
            save_models: true,
            output_dir: PathBuf::from("out"),
            threads: None,
        }
    }
}

impl RunConfig {
    /// Reads a `.json` file as JSON and anything else as TOML.
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let parsed = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        let cfg: RunConfig = parsed.map_err(|message| ConfigError::Parse {
            path: path.to_path_buf(),
            message,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.window == 0 {
            return bad("window must be at least 1".into());
        }
        if self.sim.n_sim == 0 {
            return bad("sim.n_sim must be at least 1".into());
        }
        if self.symbol.is_empty() || self.symbol.contains(['/', '\\']) {
            return bad(format!("symbol {:?} is not a plain name", self.symbol));
        }
        if let (Some(s), Some(e)) = (self.start, self.end) {
            if s > e {
                return bad(format!("start {s} is after end {e}"));
            }
        }
        if self.histogram_bins == 0 {
            return bad("histogram_bins must be at least 1".into());
        }
        if !(self.models.vol_floor > 0.0) {
            return bad("models.vol_floor must be positive".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        self.models
            .xgb
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("models.xgb: {e}")))?;
        self.models
            .lgbm
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("models.lgbm: {e}")))?;
        Ok(())
    }

    /// Settings that determine output content, as sorted-key JSON. Paths and
    /// thread count are left out.
    pub fn canonical_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = v.as_object_mut() {
            map.remove("data_dir");
            map.remove("output_dir");
            map.remove("threads");
        }
        v.to_string()
    }

    /// First 16 hex digits of the SHA-256 of [`RunConfig::canonical_json`].
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Lowercase hex SHA-256 of a byte slice.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_round_trip() {
        let c = RunConfig::default();
        assert_eq!(c.window, 60);
        assert_eq!(c.sim.n_sim, 10_000);
        let toml_text = toml::to_string(&c).unwrap();
        let back: RunConfig = toml::from_str(&toml_text).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn fingerprint_ignores_paths_only() {
        let a = RunConfig::default();
        let b = RunConfig {
            output_dir: "elsewhere".into(),
            data_dir: "x".into(),
            threads: Some(2),
            ..a.clone()
        };
        assert_eq!(a.fingerprint(), b.fingerprint());
        let mut c = a.clone();
        c.sim.seed = 9;
        assert_ne!(a.fingerprint(), c.fingerprint());
        assert_eq!(a.fingerprint().len(), 16);
    }

    #[test]
    fn partial_toml_uses_defaults() {
        let c: RunConfig = toml::from_str("window = 24\n[sim]\nn_sim = 1000\n").unwrap();
        assert_eq!(c.window, 24);
        assert_eq!(c.sim.n_sim, 1000);
        assert_eq!(c.sim.jump_rule.intensity_multiple, 2.0);
        assert!(toml::from_str::<RunConfig>("windw = 3").is_err());
    }
}
