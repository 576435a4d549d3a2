//! Per-command config files. Every field is optional in the file; the
//! resolved config has all of them filled and is written back in the same
//! shape, so it can be fed to `--config` unchanged.

use std::fs;
use std::path::{Path, PathBuf};

use polyfut::estimation::{Bounds, CaseRegime, FilterKind};
use polyfut::linalg_expm::{EigenSource, ExpmMethod, Perturbation};
use polyfut::models::{CoordinateVector, ModelKind, ModelParams};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_obs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tenors_months: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<ModelParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coords: Option<CoordinateVector>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expm_method: Option<ExpmMethod>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub panel: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regime: Option<CaseRegime>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter: Option<FilterKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelKind>,
    /// Fixed-block values; defaults to the panel's generating values, or
    /// the neutral start when those are unknown.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<ModelParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coords: Option<CoordinateVector>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_evals: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub starts: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Bounds>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expm_method: Option<ExpmMethod>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigen_sd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<Perturbation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigen_source: Option<EigenSource>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<ModelParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coords: Option<CoordinateVector>,
    /// `(χ, ξ)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tenors_months: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expm_method: Option<ExpmMethod>,
}

/// Parses a JSON file; serde's message carries the line and column.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    path.map_or_else(|| Ok(T::default()), read_json)
}
