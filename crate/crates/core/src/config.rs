//! Engine configuration shared by the CLI and the HTTP service.
//!
//! Values are layered: built-in defaults, then a config file (TOML or JSON),
//! then `ELICIT_*` environment variables, then explicit overrides such as
//! command-line flags. Unknown keys are rejected at every layer.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitting::FEEDBACK_PROBS;
use crate::supra_bayes::MAX_GRID_POINTS;

pub const ENV_PREFIX: &str = "ELICIT_";
/// Environment variable naming the config file; not itself a config key.
pub const ENV_CONFIG_PATH: &str = "ELICIT_CONFIG";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    /// Quantile-answer noise as a fraction of the analyst prior's IQR.
    pub quantile_noise_rel: f64,
    /// Dirichlet precision for partition answers.
    pub probability_precision: f64,
    /// Logit-scale noise on interval probabilities.
    pub interval_prob_noise: f64,
    /// Grid points per hyperparameter coordinate.
    pub grid_points: usize,
    /// Monte Carlo draws for prior-predictive probabilities.
    pub mc_samples: usize,
    pub feedback_probs: Vec<f64>,
    pub data_dir: PathBuf,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            quantile_noise_rel: 0.05,
            probability_precision: 100.0,
            interval_prob_noise: 0.2,
            grid_points: 50,
            mc_samples: 20_000,
            feedback_probs: FEEDBACK_PROBS.to_vec(),
            data_dir: PathBuf::from("elicit-data"),
        }
    }
}

/// A partial configuration: one layer of the stack.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantile_noise_rel: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probability_precision: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval_prob_noise: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_samples: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback_probs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_dir: Option<PathBuf>,
}

const KEYS: [&str; 7] = [
    "quantile_noise_rel",
    "probability_precision",
    "interval_prob_noise",
    "grid_points",
    "mc_samples",
    "feedback_probs",
    "data_dir",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FileFormat {
    Toml,
    Json,
}

impl FileFormat {
    /// `.json` files are JSON, anything else TOML.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => FileFormat::Json,
            _ => FileFormat::Toml,
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn check_keys<'a>(keys: impl Iterator<Item = &'a String>) -> Result<()> {
    for k in keys {
        if !KEYS.contains(&k.as_str()) {
            return Err(Error::UnknownKey(k.clone()));
        }
    }
    Ok(())
}

impl ConfigLayer {
    pub fn parse(text: &str, format: FileFormat) -> Result<Self> {
        match format {
            FileFormat::Toml => {
                let table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
                    let line = e.span().map(|s| line_of(text, s.start)).unwrap_or(0);
                    Error::ParseError(format!("line {line}: {}", e.message()))
                })?;
                check_keys(table.keys())?;
                toml::Value::Table(table)
                    .try_into()
                    .map_err(|e: toml::de::Error| Error::ParseError(e.message().to_string()))
            }
            FileFormat::Json => {
                let map: serde_json::Map<String, serde_json::Value> = serde_json::from_str(text)
                    .map_err(|e| Error::ParseError(format!("line {}: {e}", e.line())))?;
                check_keys(map.keys())?;
                serde_json::from_value(serde_json::Value::Object(map))
                    .map_err(|e| Error::ParseError(e.to_string()))
            }
        }
    }

    /// Reads `ELICIT_<KEY>` variables from an environment snapshot.
    /// `feedback_probs` is a comma-separated list.
    pub fn from_env(env: &BTreeMap<String, String>) -> Result<Self> {
        let mut layer = ConfigLayer::default();
        for (name, value) in env {
            let Some(key) = name.strip_prefix(ENV_PREFIX) else { continue };
            if name == ENV_CONFIG_PATH {
                continue;
            }
            let key = key.to_ascii_lowercase();
            let bad = |what: &str| Error::ParseError(format!("{name}={value}: expected {what}"));
            let float = || value.trim().parse::<f64>().map_err(|_| bad("a number"));
            let int = || value.trim().parse::<i64>().map_err(|_| bad("an integer"));
            match key.as_str() {
                "quantile_noise_rel" => layer.quantile_noise_rel = Some(float()?),
                "probability_precision" => layer.probability_precision = Some(float()?),
                "interval_prob_noise" => layer.interval_prob_noise = Some(float()?),
                "grid_points" => layer.grid_points = Some(int()?),
                "mc_samples" => layer.mc_samples = Some(int()?),
                "feedback_probs" => {
                    layer.feedback_probs = Some(
                        value
                            .split(',')
                            .map(|s| s.trim().parse::<f64>().map_err(|_| bad("comma-separated numbers")))
                            .collect::<Result<_>>()?,
                    )
                }
                "data_dir" => layer.data_dir = Some(PathBuf::from(value)),
                _ => return Err(Error::UnknownKey(name.clone())),
            }
        }
        Ok(layer)
    }

    fn apply(&self, cfg: &mut EngineConfig) -> Result<()> {
        let count = |v: i64, key: &str| {
            usize::try_from(v).map_err(|_| Error::ParseError(format!("{key} = {v} must be positive")))
        };
        if let Some(v) = self.quantile_noise_rel {
            cfg.quantile_noise_rel = v;
        }
        if let Some(v) = self.probability_precision {
            cfg.probability_precision = v;
        }
        if let Some(v) = self.interval_prob_noise {
            cfg.interval_prob_noise = v;
        }
        if let Some(v) = self.grid_points {
            cfg.grid_points = count(v, "grid_points")?;
        }
        if let Some(v) = self.mc_samples {
            cfg.mc_samples = count(v, "mc_samples")?;
        }
        if let Some(v) = &self.feedback_probs {
            cfg.feedback_probs = v.clone();
        }
        if let Some(v) = &self.data_dir {
            cfg.data_dir = v.clone();
        }
        Ok(())
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("quantile_noise_rel", self.quantile_noise_rel),
            ("probability_precision", self.probability_precision),
            ("interval_prob_noise", self.interval_prob_noise),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::ParseError(format!("{key} = {v} must be positive")));
            }
        }
        if self.grid_points < 2 || self.grid_points as u128 > MAX_GRID_POINTS {
            return Err(Error::ParseError(format!("grid_points = {} outside [2, 10^6]", self.grid_points)));
        }
        if self.mc_samples == 0 {
            return Err(Error::ParseError("mc_samples must be positive".into()));
        }
        if self.feedback_probs.is_empty() || self.feedback_probs.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
            return Err(Error::ParseError("feedback_probs must be nonempty and inside (0, 1)".into()));
        }
        Ok(())
    }

    /// Points per coordinate for a `dim`-dimensional grid, reduced so the
    /// total stays within the grid limit.
    pub fn grid_for(&self, dim: usize) -> usize {
        let cap = (MAX_GRID_POINTS as f64).powf(1.0 / dim.max(1) as f64).floor() as usize;
        let mut n = self.grid_points.min(cap);
        while (n as u128).pow(dim as u32) > MAX_GRID_POINTS {
            n -= 1;
        }
        n
    }
}

/// Builds the configuration from an optional file, an environment snapshot
/// and explicit overrides, in increasing order of precedence.
pub fn load_config(
    file: Option<(&str, FileFormat)>,
    env: &BTreeMap<String, String>,
    overrides: &ConfigLayer,
) -> Result<EngineConfig> {
    let mut cfg = EngineConfig::default();
    if let Some((text, format)) = file {
        ConfigLayer::parse(text, format)?.apply(&mut cfg)?;
    }
    ConfigLayer::from_env(env)?.apply(&mut cfg)?;
    overrides.apply(&mut cfg)?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn defaults() {
        let cfg = load_config(None, &BTreeMap::new(), &ConfigLayer::default()).unwrap();
        assert_eq!(cfg, EngineConfig::default());
        assert_eq!(cfg.mc_samples, 20_000);
        assert_eq!(cfg.grid_points, 50);
    }

    #[test]
    fn precedence() {
        let file = "mc_samples = 100\ngrid_points = 10\nprobability_precision = 7.0\n";
        let e = env(&[("ELICIT_MC_SAMPLES", "200"), ("ELICIT_GRID_POINTS", "20"), ("PATH", "/bin")]);
        let flags = ConfigLayer { grid_points: Some(30), ..ConfigLayer::default() };
        let cfg = load_config(Some((file, FileFormat::Toml)), &e, &flags).unwrap();
        assert_eq!(cfg.grid_points, 30);
        assert_eq!(cfg.mc_samples, 200);
        assert_eq!(cfg.probability_precision, 7.0);
    }

    #[test]
    fn json_files() {
        let cfg = load_config(Some((r#"{"feedback_probs": [0.1, 0.9]}"#, FileFormat::Json)), &BTreeMap::new(), &ConfigLayer::default()).unwrap();
        assert_eq!(cfg.feedback_probs, vec![0.1, 0.9]);
    }

    #[test]
    fn rejects_bad_input() {
        let none = BTreeMap::new();
        let flags = ConfigLayer::default();
        assert_eq!(load_config(Some(("colour = 1", FileFormat::Toml)), &none, &flags).unwrap_err(), Error::UnknownKey("colour".into()));
        assert!(matches!(load_config(Some(("grid_points = -5", FileFormat::Toml)), &none, &flags), Err(Error::ParseError(_))));
        match load_config(Some(("mc_samples = 1\ngrid_points = = 2", FileFormat::Toml)), &none, &flags) {
            Err(Error::ParseError(msg)) => assert!(msg.starts_with("line 2"), "{msg}"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(load_config(None, &env(&[("ELICIT_MC_SAMPLES", "lots")]), &flags), Err(Error::ParseError(_))));
        assert!(matches!(load_config(None, &env(&[("ELICIT_SPEED", "1")]), &flags), Err(Error::UnknownKey(_))));
        assert!(load_config(None, &env(&[("ELICIT_CONFIG", "x.toml")]), &flags).is_ok());
    }

    #[test]
    fn grid_respects_limit() {
        let cfg = EngineConfig::default();
        assert_eq!(cfg.grid_for(2), 50);
        assert_eq!(cfg.grid_for(4), 31);
        assert!((cfg.grid_for(4) as u128).pow(4) <= MAX_GRID_POINTS);
    }
}
