//! JSON run configuration for the sweep subcommands.

use std::path::{Path, PathBuf};

use majorant_core::experiments::DistSpec;
use majorant_core::solver::Direction;
use majorant_core::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Output stem; `.csv`, `.json` and `.svg` are appended.
    #[serde(default)]
    pub path: Option<PathBuf>,
    /// Format written to stdout when no path is given.
    #[serde(default)]
    pub format: Option<Format>,
    #[serde(default)]
    pub svg: bool,
    #[serde(default)]
    pub log_scale: bool,
}

/// One sweep run. `params` holds the experiment's own parameters and is checked by it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Must match the subcommand if present.
    #[serde(default)]
    pub experiment: Option<String>,
    #[serde(default)]
    pub solver: Option<String>,
    #[serde(default)]
    pub jobs: Option<usize>,
    /// Largest tolerated fraction of cells that failed (not structurally masked).
    #[serde(default)]
    pub max_masked: Option<f64>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub params: serde_json::Value,
}

/// A single conversion `initial^n -> target^m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvertConfig {
    pub initial: DistSpec,
    pub target: DistSpec,
    /// Gibbs weights shared by both states; plain majorization without them.
    #[serde(default)]
    pub gibbs: Option<DistSpec>,
    #[serde(default = "one")]
    pub n: usize,
    /// Target copies; defaults to `n`.
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub direction: Direction,
    #[serde(default)]
    pub solver: Option<String>,
}

fn one() -> usize {
    1
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Directory of a config file, for resolving relative input paths.
pub fn base_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

/// A distribution argument: an existing file, or inline numbers like `0.6,0.4`.
pub fn dist_arg(arg: &str) -> Result<DistSpec> {
    let path = Path::new(arg);
    if path.is_file() {
        return Ok(DistSpec::File(path.to_path_buf()));
    }
    majorant_core::experiments::parse_numbers(arg)
        .map(DistSpec::Inline)
        .map_err(|_| {
            Error::InvalidDistribution(format!("`{arg}` is neither a file nor a list of numbers"))
        })
}
