//! Run configuration: a single JSON file with nested sections, every field
//! optional except the chain size. Command-line flags override file keys.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use ness_core::{ModelParams, OrderingKind, SweepSchedule};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Scalar applied to every site/bond, or one explicit value per site/bond.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarOrVec {
    Scalar(f64),
    PerEntry(Vec<f64>),
}

impl ScalarOrVec {
    fn expand(&self, len: usize, field: &str) -> Result<Vec<f64>, ConfigError> {
        match self {
            ScalarOrVec::Scalar(v) => Ok(vec![*v; len]),
            ScalarOrVec::PerEntry(values) if values.len() == len => Ok(values.clone()),
            ScalarOrVec::PerEntry(values) => Err(ConfigError::Invalid(format!(
                "`{field}` needs {len} entries, found {}",
                values.len()
            ))),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub n_sites: usize,
    pub j: ScalarOrVec,
    pub delta: ScalarOrVec,
    pub h: ScalarOrVec,
    pub gamma1: f64,
    pub gamma_n: f64,
    pub f1: f64,
    pub f_n: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            n_sites: 0,
            j: ScalarOrVec::Scalar(1.0),
            delta: ScalarOrVec::Scalar(1.0),
            h: ScalarOrVec::Scalar(0.0),
            gamma1: 1.0,
            gamma_n: 1.0,
            f1: 1.0,
            f_n: 0.0,
        }
    }
}

impl ModelConfig {
    pub fn to_params(&self) -> Result<ModelParams, ConfigError> {
        if self.n_sites == 0 {
            return Err(ConfigError::Invalid(
                "`model.n_sites` must be set and positive".into(),
            ));
        }
        let bonds = self.n_sites - 1;
        let params = ModelParams {
            n_sites: self.n_sites,
            j: self.j.expand(bonds, "model.j")?,
            delta: self.delta.expand(bonds, "model.delta")?,
            h: self.h.expand(self.n_sites, "model.h")?,
            gamma1: self.gamma1,
            gamma_n: self.gamma_n,
            f1: self.f1,
            f_n: self.f_n,
        };
        params
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(params)
    }

    /// Same chain with a different length, reusing the scalar couplings.
    pub fn with_sites(&self, n_sites: usize) -> Self {
        Self {
            n_sites,
            ..self.clone()
        }
    }

    /// Same chain with both bath rates replaced.
    pub fn with_gamma(&self, gamma: f64) -> Self {
        Self {
            gamma1: gamma,
            gamma_n: gamma,
            ..self.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Single,
    GammaScan,
    SizeScan,
    OrderingCompare,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanConfig {
    /// Bath rates visited by `gamma_scan`.
    pub gammas: Vec<f64>,
    /// Chain lengths visited by `size_scan`.
    pub sizes: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub scheme: OrderingKind,
    pub schedule: SweepSchedule,
    pub experiment: ExperimentKind,
    pub scan: ScanConfig,
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Parallel worker slots for scan points; 1 runs sequentially.
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            scheme: OrderingKind::Rln,
            schedule: SweepSchedule::default(),
            experiment: ExperimentKind::Single,
            scan: ScanConfig::default(),
            output_dir: PathBuf::from("out"),
            seed: 0,
            workers: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config: Self = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.model.to_params()?;
        self.schedule
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        match self.experiment {
            ExperimentKind::GammaScan if self.scan.gammas.is_empty() => Err(
                ConfigError::Invalid("`scan.gammas` must be nonempty for gamma_scan".into()),
            ),
            ExperimentKind::SizeScan if self.scan.sizes.is_empty() => Err(ConfigError::Invalid(
                "`scan.sizes` must be nonempty for size_scan".into(),
            )),
            _ => Ok(()),
        }
    }
}
