use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{Check, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Config(format!("unknown output format `{other}` (expected csv or json)"))),
        }
    }
}

/// Signal scales for a remainder sweep, given directly or as
/// `r^H / sigma^2` targets that are converted to scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Name of the base scenario; defaults to the first one.
    #[serde(default)]
    pub scenario: Option<String>,
    #[serde(default)]
    pub scales: Option<Vec<f64>>,
    #[serde(default)]
    pub targets: Option<Vec<f64>>,
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

fn default_psi_c() -> f64 {
    1.0
}

fn default_sampled_lambdas() -> usize {
    100
}

fn default_verbosity() -> String {
    "warn".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
    /// Checks to run; all of them when absent.
    #[serde(default)]
    pub checks: Option<Vec<Check>>,
    /// Log level: error, warn, info, debug or trace.
    #[serde(default = "default_verbosity")]
    pub verbosity: String,
    #[serde(default = "default_psi_c")]
    pub psi_c: f64,
    #[serde(default = "default_sampled_lambdas")]
    pub sampled_lambdas: usize,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(rename = "scenario")]
    pub scenarios: Vec<Scenario>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if config.scenarios.is_empty() {
            return Err(Error::Config("at least one [[scenario]] block is required".into()));
        }
        for s in &config.scenarios {
            s.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        let mut names: Vec<&str> = config.scenarios.iter().map(|s| s.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("scenario name `{}` is used twice", w[0])));
        }
        if let Some(bad) = names.iter().find(|n| n.is_empty() || n.contains(['/', '\\'])) {
            return Err(Error::Config(format!("scenario name `{bad}` cannot be used as a file name")));
        }
        if !(config.psi_c > 0.0 && config.psi_c.is_finite()) {
            return Err(Error::Config(format!("psi_c must be positive, got {}", config.psi_c)));
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn sweep_base(&self) -> Result<&Scenario> {
        match self.sweep.as_ref().and_then(|s| s.scenario.as_deref()) {
            None => Ok(&self.scenarios[0]),
            Some(name) => self
                .scenarios
                .iter()
                .find(|s| s.name == name)
                .ok_or_else(|| Error::Config(format!("sweep scenario `{name}` is not defined"))),
        }
    }
}
