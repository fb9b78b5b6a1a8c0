use std::path::Path;

use cxrlens_nn::{Adam, AdamConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ClassifierModel, FreezePolicy, ModelSpec};
use crate::dataset::LabelVocabulary;
use crate::error::{Error, Result};
use crate::profile::{Arch, ArchProfile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamSettings {
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
    pub weight_decay: f32,
}

impl Default for AdamSettings {
    fn default() -> Self {
        let c = AdamConfig::default();
        Self {
            beta1: c.beta1,
            beta2: c.beta2,
            eps: c.eps,
            weight_decay: c.weight_decay,
        }
    }
}

impl From<AdamSettings> for AdamConfig {
    fn from(s: AdamSettings) -> Self {
        AdamConfig {
            beta1: s.beta1,
            beta2: s.beta2,
            eps: s.eps,
            weight_decay: s.weight_decay,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub steps: u64,
    pub adam: AdamSettings,
}

/// Sidecar describing a checkpoint directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub arch: Arch,
    pub num_classes: usize,
    pub vocabulary: Vec<String>,
    pub freeze_policy: FreezePolicy,
    /// Completed training epochs.
    pub epoch: usize,
    pub config_hash: String,
    pub width_divisor: usize,
    pub seed: u64,
    pub profile: ArchProfile,
    pub weights_sha256: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerState>,
}

impl CheckpointMeta {
    pub fn model_spec(&self) -> ModelSpec {
        ModelSpec {
            profile: self.profile.clone(),
            num_classes: self.num_classes,
            pretrained: false,
            freeze_policy: self.freeze_policy,
            width_divisor: self.width_divisor,
            seed: self.seed,
            zero_init_residual: false,
        }
    }

    pub fn vocabulary(&self) -> Result<LabelVocabulary> {
        LabelVocabulary::new(self.vocabulary.clone())
    }
}

/// A checkpoint directory: `weights.safetensors`, optional
/// `optimizer.safetensors` and the `checkpoint.json` sidecar.
pub struct Checkpoint;

impl Checkpoint {
    pub const WEIGHTS: &'static str = "weights.safetensors";
    pub const OPTIMIZER: &'static str = "optimizer.safetensors";
    pub const SIDECAR: &'static str = "checkpoint.json";

    pub fn save(
        dir: impl AsRef<Path>,
        model: &ClassifierModel,
        vocabulary: &LabelVocabulary,
        epoch: usize,
        config_hash: &str,
        optimizer: Option<(&Adam, AdamSettings)>,
    ) -> Result<CheckpointMeta> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let bytes = cxrlens_nn::io::to_bytes(&model.network().state())?;
        let weights = dir.join(Self::WEIGHTS);
        std::fs::write(&weights, &bytes).map_err(|e| Error::io(&weights, e))?;
        let optimizer = match optimizer {
            Some((adam, adam_settings)) => {
                cxrlens_nn::io::save(&dir.join(Self::OPTIMIZER), &adam.state())?;
                Some(OptimizerState {
                    steps: adam.steps_taken(),
                    adam: adam_settings,
                })
            }
            None => None,
        };
        let spec = model.spec();
        let meta = CheckpointMeta {
            arch: spec.arch(),
            num_classes: spec.num_classes,
            vocabulary: vocabulary.classes().to_vec(),
            freeze_policy: spec.freeze_policy,
            epoch,
            config_hash: config_hash.to_string(),
            width_divisor: spec.width_divisor,
            seed: spec.seed,
            profile: spec.profile.clone(),
            weights_sha256: hex::encode(Sha256::digest(&bytes)),
            optimizer,
        };
        write_json(&dir.join(Self::SIDECAR), &meta)?;
        Ok(meta)
    }

    pub fn read_meta(dir: impl AsRef<Path>) -> Result<CheckpointMeta> {
        let path = dir.as_ref().join(Self::SIDECAR);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json { path, source })
    }

    /// Rebuilds the model and restores every tensor.
    pub fn load(dir: impl AsRef<Path>) -> Result<(ClassifierModel, CheckpointMeta)> {
        let dir = dir.as_ref();
        let meta = Self::read_meta(dir)?;
        let path = dir.join(Self::WEIGHTS);
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let digest = hex::encode(Sha256::digest(&bytes));
        if digest != meta.weights_sha256 {
            return Err(Error::CheckpointMismatch {
                field: "weights_sha256".into(),
                expected: meta.weights_sha256.clone(),
                found: digest,
            });
        }
        let tensors = cxrlens_nn::io::from_bytes(&bytes)?;
        let mut model = ClassifierModel::build(&meta.model_spec(), None)?;
        model.network_mut().load_state(&tensors, |_| true)?;
        Ok((model, meta))
    }

    pub fn load_optimizer(dir: impl AsRef<Path>, meta: &CheckpointMeta) -> Result<Option<Adam>> {
        let Some(state) = &meta.optimizer else {
            return Ok(None);
        };
        let tensors = cxrlens_nn::io::load(&dir.as_ref().join(Self::OPTIMIZER))?;
        let mut adam = Adam::new(state.adam.into());
        adam.load_state(state.steps, &tensors)?;
        Ok(Some(adam))
    }
}

pub(crate) fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
