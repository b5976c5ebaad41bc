//! Lab-wide configuration file.
//!
//! Precedence is command-line flag, then config file, then built-in
//! default; callers apply flags on top of [`LabConfig::load`].

use crate::bounds::BoundConfig;
use crate::error::{LabError, Result};
use crate::kernel::KernelGrid;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Environment variable naming a config file when no path is given.
pub const CONFIG_ENV: &str = "ESSEEN_LAB_CONFIG";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabConfig {
    pub kernel: KernelGrid,
    pub bounds: BoundConfig,
    /// Per-convolution pruning threshold, 0 disables pruning.
    pub prune_tol: f64,
}

impl LabConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| LabError::BadParam(format!("config: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// The explicit path if given, else the file named by
    /// `ESSEEN_LAB_CONFIG`, else the defaults.
    pub fn load(explicit: Option<&Path>) -> Result<Self> {
        let from_env = std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
        match explicit.map(Path::to_path_buf).or(from_env) {
            Some(p) => Self::from_file(&p),
            None => Ok(Self::default()),
        }
    }
}
