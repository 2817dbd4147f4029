//! Layered configuration: TOML file, then `COMBSCORE_*` environment
//! variables, then command-line overrides.
//!
//! Environment keys use `__` between path segments, e.g.
//! `COMBSCORE_SCORING__WEIGHTS__ALPHA_FORMAT=0.3` or
//! `COMBSCORE_SERVER__BIND=0.0.0.0:9000`. Flag overrides use dotted paths
//! (`--set scoring.epsilon_std=1e-6`).

use std::path::{Path, PathBuf};

use combscore_core::rewards::{RewardWeights, DEFAULT_EPSILON_STD};
use combscore_core::{NormalizationPolicy, TaskMode};
use combscore_synthesis::SynthesisConfig;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

pub const ENV_PREFIX: &str = "COMBSCORE_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServerConfig {
    pub bind: String,
    /// Largest accepted request body, in bytes.
    pub max_body_bytes: usize,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1:8080".into(),
            max_body_bytes: 16 * 1024 * 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoringConfig {
    pub mode: TaskMode,
    pub weights: RewardWeights,
    pub epsilon_std: f64,
    pub normalization: NormalizationPolicy,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        Self {
            mode: TaskMode::DrugComb,
            weights: RewardWeights::default(),
            epsilon_std: DEFAULT_EPSILON_STD,
            normalization: NormalizationPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct DataConfig {
    /// Field-mapping TOML for source corpora; the bundled mapping when unset.
    pub mapping_file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct AppConfig {
    pub server: ServerConfig,
    pub scoring: ScoringConfig,
    pub data: DataConfig,
    pub synthesis: SynthesisConfig,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("config {origin}: {message}")]
    Invalid { origin: String, message: String },
}

fn invalid(origin: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        origin: origin.into(),
        message: message.into(),
    }
}

/// Parse a scalar the way TOML would, falling back to a bare string.
fn scalar(raw: &str) -> Value {
    let raw = raw.trim();
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

fn set_path(root: &mut Table, path: &[String], value: Value, origin: &str) -> Result<(), ConfigError> {
    let (last, parents) = path.split_last().ok_or_else(|| invalid(origin, "empty key"))?;
    let mut table = root;
    for seg in parents {
        let entry = table.entry(seg.clone()).or_insert_with(|| Value::Table(Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| invalid(origin, format!("{seg} is not a table")))?;
    }
    table.insert(last.clone(), value);
    Ok(())
}

impl AppConfig {
    /// File (if any) → environment → `overrides` (`dotted.key=value`).
    pub fn load<I>(file: Option<&Path>, env: I, overrides: &[String]) -> Result<Self, ConfigError>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut root = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
                    path: path.to_path_buf(),
                    source,
                })?;
                text.parse::<Table>().map_err(|e| invalid(path.display().to_string(), e.to_string()))?
            }
            None => Table::new(),
        };

        let mut env: Vec<(String, String)> = env
            .into_iter()
            .filter(|(k, _)| k.starts_with(ENV_PREFIX) && k.contains("__"))
            .collect();
        env.sort();
        for (key, value) in env {
            let path: Vec<String> = key[ENV_PREFIX.len()..].split("__").map(str::to_lowercase).collect();
            set_path(&mut root, &path, scalar(&value), &key)?;
        }

        for item in overrides {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| invalid(item.as_str(), "expected key=value"))?;
            let path: Vec<String> = key.trim().split('.').map(str::to_string).collect();
            set_path(&mut root, &path, scalar(value), item)?;
        }

        let cfg: AppConfig = Value::Table(root)
            .try_into()
            .map_err(|e: toml::de::Error| invalid("merged config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_process(file: Option<&Path>, overrides: &[String]) -> Result<Self, ConfigError> {
        Self::load(file, std::env::vars(), overrides)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.scoring
            .weights
            .validate()
            .map_err(|e| invalid("scoring.weights", e.to_string()))?;
        if !(self.scoring.epsilon_std > 0.0) {
            return Err(invalid("scoring.epsilon_std", "must be > 0"));
        }
        self.synthesis.validate().map_err(|e| invalid("synthesis", e.to_string()))?;
        Ok(())
    }
}
