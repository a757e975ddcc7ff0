//! Run configuration: a TOML file with per-command overrides from CLI
//! flags, plus environment-variable overrides for secrets.
//!
//! Precedence: CLI flag > environment variable > config file > default.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;
use thiserror::Error;

use crate::assess::AxisSelection;
use crate::backend::{BackendProfile, Client, MockBackend, MockScript};
use crate::decompose::DEFAULT_VALIDATION_RETRIES;
use crate::select::WeightScheme;

pub const API_KEY_ENV: &str = "VIAUDIT_API_KEY";
pub const ENDPOINT_ENV: &str = "VIAUDIT_ENDPOINT";

/// Default challenge share: the 250K-of-300K benchmark split.
pub const DEFAULT_CHALLENGE_FRACTION: f64 = 5.0 / 6.0;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("bad config {path}: {detail}")]
    Parse { path: PathBuf, detail: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub concurrency: Option<usize>,
    pub challenge_fraction: Option<f64>,
    /// `l,k,v` weight triple, decimals or fractions.
    pub weights: Option<String>,
    /// Comma-separated subset of `logic,knowledge,vision`.
    pub axes: Option<String>,
    pub validation_retries: Option<u32>,
    pub taxonomy: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub mock_script: Option<PathBuf>,
    pub decompose_backend: Option<BackendConfig>,
    pub assess_backend: Option<BackendConfig>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub endpoint: String,
    pub model_id: String,
    #[serde(default)]
    pub api_key: Option<String>,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_max_in_flight")]
    pub max_in_flight: usize,
    #[serde(default)]
    pub vision: bool,
    /// Escape hatch off the hard-coded greedy sampling; a non-zero value
    /// is flagged in provenance and manifests.
    #[serde(default)]
    pub temperature_override: Option<f64>,
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
}

fn default_timeout_secs() -> u64 {
    60
}

fn default_max_retries() -> u32 {
    3
}

fn default_max_in_flight() -> usize {
    8
}

fn default_backoff_ms() -> u64 {
    250
}

impl BackendConfig {
    /// Applies environment overrides and converts to a live profile.
    pub fn to_profile(&self) -> BackendProfile {
        let endpoint = std::env::var(ENDPOINT_ENV).unwrap_or_else(|_| self.endpoint.clone());
        let api_key = std::env::var(API_KEY_ENV).ok().or_else(|| self.api_key.clone());
        BackendProfile {
            endpoint,
            model_id: self.model_id.clone(),
            api_key,
            timeout: Duration::from_secs(self.timeout_secs),
            max_retries: self.max_retries,
            max_in_flight: self.max_in_flight,
            vision: self.vision,
            temperature: self.temperature_override.unwrap_or(0.0),
            backoff: Duration::from_millis(self.backoff_ms),
        }
    }
}

/// Flag-level overrides collected by the CLI.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub concurrency: Option<usize>,
    pub challenge_fraction: Option<f64>,
    pub weights: Option<String>,
    pub axes: Option<String>,
    pub mock_script: Option<PathBuf>,
}

/// Fully resolved configuration for one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub concurrency: usize,
    pub challenge_fraction: f64,
    pub weights: WeightScheme,
    pub axes: AxisSelection,
    pub validation_retries: u32,
    pub taxonomy: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub mock_script: Option<PathBuf>,
    pub decompose_backend: Option<BackendConfig>,
    pub assess_backend: Option<BackendConfig>,
}

impl RunConfig {
    pub fn resolve(file: Option<FileConfig>, overrides: Overrides) -> Result<Self, ConfigError> {
        let FileConfig {
            seed,
            concurrency,
            challenge_fraction,
            weights,
            axes,
            validation_retries,
            taxonomy,
            corpus,
            mock_script,
            decompose_backend,
            assess_backend,
        } = file.unwrap_or_default();
        let weights = match overrides.weights.or(weights) {
            Some(text) => {
                WeightScheme::parse(&text).map_err(|e| ConfigError::Invalid(e.to_string()))?
            }
            None => WeightScheme::default(),
        };
        let axes = match overrides.axes.or(axes) {
            Some(text) => AxisSelection::parse(&text).map_err(ConfigError::Invalid)?,
            None => AxisSelection::default(),
        };
        let challenge_fraction = overrides
            .challenge_fraction
            .or(challenge_fraction)
            .unwrap_or(DEFAULT_CHALLENGE_FRACTION);
        if !(0.0..=1.0).contains(&challenge_fraction) {
            return Err(ConfigError::Invalid(format!(
                "challenge_fraction {challenge_fraction} outside [0, 1]"
            )));
        }
        Ok(RunConfig {
            seed: overrides.seed.or(seed).unwrap_or(0),
            concurrency: overrides.concurrency.or(concurrency).unwrap_or(8).max(1),
            challenge_fraction,
            weights,
            axes,
            validation_retries: validation_retries.unwrap_or(DEFAULT_VALIDATION_RETRIES),
            taxonomy,
            corpus,
            mock_script: overrides.mock_script.or(mock_script),
            decompose_backend,
            assess_backend,
        })
    }

    /// Builds the text-model client (decomposition and injection stages).
    pub fn text_client(&self) -> Result<Client, ConfigError> {
        self.client_for(&self.decompose_backend, "decompose_backend")
    }

    /// Builds the judge client (assessment stages).
    pub fn judge_client(&self) -> Result<Client, ConfigError> {
        self.client_for(&self.assess_backend, "assess_backend")
    }

    fn client_for(
        &self,
        backend: &Option<BackendConfig>,
        name: &str,
    ) -> Result<Client, ConfigError> {
        if let Some(script_path) = &self.mock_script {
            let script = MockScript::load(script_path)
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
            let mock = std::sync::Arc::new(MockBackend::from_script(script));
            return Ok(Client::new(mock, self.concurrency));
        }
        match backend {
            Some(config) => Client::from_profile(config.to_profile())
                .map_err(|e| ConfigError::Invalid(e.to_string())),
            None => Err(ConfigError::Invalid(format!(
                "no {name} configured and no --mock-script given"
            ))),
        }
    }
}
