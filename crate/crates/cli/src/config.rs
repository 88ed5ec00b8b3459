//! Optional TOML settings; command-line flags take precedence.

use std::path::Path;

use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub profile: Option<String>,
    pub params: Option<Vec<f64>>,
    pub antisymmetric: Option<bool>,
    pub lambda: Option<f64>,
    pub n0: Option<i32>,
    pub kernel_mode: Option<String>,
    pub p: Option<f64>,
    pub psi: Option<String>,
    pub dirs: Option<usize>,
    pub grid_size: Option<usize>,
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
    pub resolve: Option<bool>,
    pub quick: Option<bool>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }
}

/// First present value: flag, then file, then default.
pub fn pick<T: Clone>(flag: Option<T>, file: &Option<T>, default: T) -> T {
    flag.or_else(|| file.clone()).unwrap_or(default)
}
