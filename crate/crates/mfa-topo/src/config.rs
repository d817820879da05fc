//! Optional TOML configuration. Keys are the long flag names; any flag
//! given on the command line wins over the file.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ConfigFile {
    pub threads: Option<usize>,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub degree: Option<usize>,
    pub spans: Option<String>,
    pub model: Option<PathBuf>,
    pub model_g: Option<PathBuf>,
    pub isovalue: Option<f64>,
    pub k: Option<f64>,
    pub epsilon: Option<f64>,
    pub gamma: Option<f64>,
    pub seeds: Option<usize>,
    pub ratio: Option<usize>,
    pub kind: Option<String>,
    pub metrics: Option<PathBuf>,
    pub segments: Option<PathBuf>,
    pub criticals: Option<PathBuf>,
    pub k_list: Option<Vec<f64>>,
    pub epsilon_list: Option<Vec<f64>>,
    pub gamma_list: Option<Vec<f64>>,
    pub field: Option<String>,
    pub samples_per_span: Option<usize>,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    pub graph: Option<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::parse(path, e.to_string()))
    }
}
