//! Run configuration: a TOML file of `key = value` settings, overridden by
//! command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Root of every derived seed.
    pub seed: u64,
    /// Neighbour rank; `ceil(sqrt(M))` of the reference size when unset.
    pub k: Option<usize>,
    /// Fraction of points in the evaluation set.
    pub split_fraction: f64,
    /// Threshold significance level.
    pub alpha: f64,
    /// Bhattacharyya window length; the neighbour rank when unset.
    pub window_len: Option<usize>,
    /// Resampling grid size; the dataset size when unset.
    pub grid_size: Option<usize>,
    /// Directory for outputs given without an explicit path.
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            k: None,
            split_fraction: 0.5,
            alpha: 0.05,
            window_len: None,
            grid_size: None,
            output_dir: PathBuf::from("."),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::invalid("config", e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config fields are TOML-representable")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::invalid("split_fraction", format!("{} not in (0, 1)", self.split_fraction)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid("alpha", format!("{} not in (0, 1)", self.alpha)));
        }
        if self.k.is_some_and(|k| k < 2) {
            return Err(Error::invalid("k", "must be at least 2"));
        }
        if self.window_len.is_some_and(|w| w < 2) {
            return Err(Error::invalid("window_len", "must be at least 2"));
        }
        if self.grid_size.is_some_and(|g| g < 2) {
            return Err(Error::invalid("grid_size", "must be at least 2"));
        }
        Ok(())
    }
}
