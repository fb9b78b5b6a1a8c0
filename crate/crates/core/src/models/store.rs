use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ndarray::ArrayD;

use super::ClassifierModel;
use crate::error::{Error, Result};
use crate::profile::Arch;

/// Environment variable naming the pretrained-weight directory.
pub const WEIGHTS_ENV: &str = "CXRLENS_WEIGHTS";

/// Directory of pretrained backbone weights, one safetensors file per
/// architecture and width: `<arch>-w<divisor>.safetensors`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightStore {
    root: PathBuf,
}

impl WeightStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn from_env() -> Option<Self> {
        std::env::var_os(WEIGHTS_ENV)
            .filter(|v| !v.is_empty())
            .map(Self::new)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn file_name(arch: Arch, width_divisor: usize) -> String {
        format!("{}-w{width_divisor}.safetensors", arch.name())
    }

    pub fn path(&self, arch: Arch, width_divisor: usize) -> PathBuf {
        self.root.join(Self::file_name(arch, width_divisor))
    }

    pub fn contains(&self, arch: Arch, width_divisor: usize) -> bool {
        self.path(arch, width_divisor).is_file()
    }

    pub fn load(&self, arch: Arch, width_divisor: usize) -> Result<BTreeMap<String, ArrayD<f32>>> {
        let path = self.path(arch, width_divisor);
        if !path.is_file() {
            return Err(Error::Weights(format!(
                "{} not found; run `cxrlens pretrain --arch {arch} --width-divisor {width_divisor}` \
                 or point {} at a directory holding it",
                path.display(),
                super::WEIGHTS_ENV
            )));
        }
        cxrlens_nn::io::load(&path).map_err(|e| Error::Weights(format!("{}: {e}", path.display())))
    }

    /// Stores every non-head tensor of `model`.
    pub fn save_from(&self, model: &ClassifierModel) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.root).map_err(|e| Error::io(&self.root, e))?;
        let prefix = format!("{}.", model.head_name());
        let tensors: Vec<_> = model
            .network()
            .state()
            .into_iter()
            .filter(|(n, _)| !n.starts_with(&prefix))
            .collect();
        let path = self.path(model.arch(), model.spec().width_divisor);
        cxrlens_nn::io::save(&path, &tensors)?;
        Ok(path)
    }
}
