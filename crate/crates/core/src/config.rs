//! Run configuration: a TOML file whose fields command-line flags
//! override. The resolved result is written next to every output.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluate::EvalConfig;
use crate::models::FreezePolicy;
use crate::profile::Arch;
use crate::trainer::TrainConfig;

pub const RESOLVED_CONFIG: &str = "resolved_config.toml";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub image_root: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub train_list: Option<PathBuf>,
    pub test_list: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    /// Normalized split manifests written by `prepare`.
    pub train_split: Option<PathBuf>,
    pub test_split: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    /// Class list, one per line. The NIH list when absent.
    pub vocabulary: Option<PathBuf>,
    /// Pretrained weight directory; falls back to the environment.
    pub weights: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub arch: Arch,
    /// Square input side; the architecture's canonical size when absent.
    pub input_size: Option<usize>,
    pub width_divisor: usize,
    pub freeze_policy: FreezePolicy,
    pub pretrained: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            arch: Arch::Resnet152,
            input_size: None,
            width_divisor: 1,
            freeze_policy: FreezePolicy::UpToBoundary,
            pretrained: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubsetConfig {
    pub fraction: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: PathsConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub subset: SubsetConfig,
}

impl RunConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// The file's contents, or defaults when no file is given.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        path.map(Self::from_file).transpose().map(Option::unwrap_or_default)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configuration serializes")
    }

    /// Writes `resolved_config.toml` into `dir`.
    pub fn write_resolved(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(RESOLVED_CONFIG);
        std::fs::write(&path, self.to_toml()).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

/// Fails unless `path` exists, naming the role it plays.
pub fn require_file(path: Option<&Path>, role: &str) -> Result<PathBuf> {
    let p = path.ok_or_else(|| Error::InvalidArgument(format!("missing {role} path")))?;
    if !p.exists() {
        return Err(Error::InvalidArgument(format!("{role} `{}` does not exist", p.display())));
    }
    Ok(p.to_path_buf())
}
