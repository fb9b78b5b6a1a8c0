//! Classifier architectures, pretrained initialization and freezing.

mod alexnet;
mod checkpoint;
mod inception;
mod resnet;
mod store;

use std::fmt;

use cxrlens_nn::init::uniform_weight;
use cxrlens_nn::{Network, Pass, SlotMut};
use ndarray::{Array2, Array4, Ix2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use checkpoint::{AdamSettings, Checkpoint, CheckpointMeta};
pub(crate) use checkpoint::write_json;
pub use store::{WeightStore, WEIGHTS_ENV};

use crate::error::{Error, Result};
use crate::profile::{Arch, ArchProfile, LayerSelector};

/// Which parameter groups receive gradient updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreezePolicy {
    /// Everything trains.
    None,
    /// Only the classification head trains.
    Backbone,
    /// Blocks from the profile's freeze boundary onwards train.
    #[default]
    UpToBoundary,
}

impl fmt::Display for FreezePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FreezePolicy::None => "none",
            FreezePolicy::Backbone => "backbone",
            FreezePolicy::UpToBoundary => "up_to_boundary",
        })
    }
}

impl std::str::FromStr for FreezePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(FreezePolicy::None),
            "backbone" => Ok(FreezePolicy::Backbone),
            "up_to_boundary" => Ok(FreezePolicy::UpToBoundary),
            _ => Err(Error::InvalidArgument(format!(
                "unknown freeze policy `{s}`; valid: none, backbone, up_to_boundary"
            ))),
        }
    }
}

/// Channel-count scaling. Every layer width `c` becomes `ceil(c / divisor)`;
/// topology and tensor names are unchanged.
#[derive(Debug, Clone, Copy)]
struct Width(usize);

impl Width {
    fn of(self, channels: usize) -> usize {
        channels.div_ceil(self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub profile: ArchProfile,
    pub num_classes: usize,
    pub pretrained: bool,
    pub freeze_policy: FreezePolicy,
    /// 1 builds the full-width network.
    pub width_divisor: usize,
    pub seed: u64,
    /// Start every residual branch's last batch-norm scale at zero so each
    /// bottleneck begins as the identity. Only affects ResNet and only
    /// fresh (not pretrained) weights.
    pub zero_init_residual: bool,
}

impl ModelSpec {
    /// Full-width, pretrained, boundary-frozen model at the canonical input size.
    pub fn new(arch: Arch, num_classes: usize) -> Self {
        Self {
            profile: ArchProfile::new(arch),
            num_classes,
            pretrained: true,
            freeze_policy: FreezePolicy::UpToBoundary,
            width_divisor: 1,
            seed: 0,
            zero_init_residual: false,
        }
    }

    pub fn arch(&self) -> Arch {
        self.profile.arch
    }

    pub fn pretrained(mut self, on: bool) -> Self {
        self.pretrained = on;
        self
    }

    pub fn zero_init_residual(mut self, on: bool) -> Self {
        self.zero_init_residual = on;
        self
    }

    pub fn freeze(mut self, policy: FreezePolicy) -> Self {
        self.freeze_policy = policy;
        self
    }

    pub fn width_divisor(mut self, divisor: usize) -> Self {
        self.width_divisor = divisor;
        self
    }

    pub fn input_size(mut self, size: usize) -> Self {
        self.profile.input_size = size;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.profile.validate()?;
        if self.num_classes == 0 {
            return Err(Error::InvalidArgument("num_classes must be positive".into()));
        }
        if self.width_divisor == 0 {
            return Err(Error::InvalidArgument("width_divisor must be positive".into()));
        }
        Ok(())
    }
}

/// Name of the classification head block.
pub fn head_name(arch: Arch) -> &'static str {
    match arch {
        Arch::Alexnet => "classifier.6",
        Arch::Resnet152 | Arch::InceptionV3 => "fc",
    }
}

/// A named block resolved for activation capture.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerHandle {
    pub index: usize,
    pub name: String,
}

/// A network with a multi-label head producing raw logits.
pub struct ClassifierModel {
    spec: ModelSpec,
    net: Network,
    head: usize,
}

impl ClassifierModel {
    /// Builds the architecture from `spec.seed`. With `spec.pretrained`,
    /// every non-head tensor is then loaded from `store`; a missing store or
    /// file is an error. The head is initialized from its own seeded stream,
    /// so it is identical with or without pretrained weights.
    pub fn build(spec: &ModelSpec, store: Option<&WeightStore>) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let w = Width(spec.width_divisor);
        let net = match spec.arch() {
            Arch::Alexnet => alexnet::build(w, spec.num_classes, &mut rng),
            Arch::Resnet152 => resnet::build(w, spec.num_classes, &mut rng),
            Arch::InceptionV3 => inception::build(w, spec.num_classes, &mut rng),
        };
        let head = net
            .index_of(head_name(spec.arch()))
            .expect("architectures register their head");
        let mut model = Self {
            spec: spec.clone(),
            net,
            head,
        };
        model.init_head();
        if spec.zero_init_residual && spec.arch() == Arch::Resnet152 {
            model.net.visit_mut(&mut |name, mut slot| {
                if name.ends_with(".bn3.weight") {
                    slot.tensor_mut().fill(0.0);
                }
            });
        }
        if spec.pretrained {
            let store = store.ok_or_else(|| {
                Error::Weights(format!(
                    "no weight store configured; set {WEIGHTS_ENV} or pass a weights directory"
                ))
            })?;
            let tensors = store.load(spec.arch(), spec.width_divisor)?;
            model.load_backbone(&tensors)?;
        }
        model.apply_freeze(spec.freeze_policy)?;
        Ok(model)
    }

    fn init_head(&mut self) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.spec.seed);
        rng.set_stream(1);
        self.net.visit_block_mut(self.head, &mut |name, slot| {
            if let SlotMut::Param(p) = slot {
                if name.ends_with(".weight") {
                    uniform_weight(&mut p.value, &mut rng);
                } else {
                    p.value.fill(0.0);
                }
            }
        });
    }

    /// Loads every tensor outside the head.
    pub fn load_backbone(
        &mut self,
        tensors: &std::collections::BTreeMap<String, ndarray::ArrayD<f32>>,
    ) -> Result<usize> {
        let prefix = format!("{}.", self.head_name());
        Ok(self.net.load_state(tensors, |n| !n.starts_with(&prefix))?)
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn profile(&self) -> &ArchProfile {
        &self.spec.profile
    }

    pub fn arch(&self) -> Arch {
        self.spec.arch()
    }

    pub fn num_classes(&self) -> usize {
        self.spec.num_classes
    }

    pub fn head_name(&self) -> &'static str {
        head_name(self.arch())
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn network_mut(&mut self) -> &mut Network {
        &mut self.net
    }

    /// Index of the first block at or after the freeze boundary.
    pub fn boundary_index(&self) -> Result<usize> {
        let b = &self.spec.profile.freeze_boundary;
        let dotted = format!("{b}.");
        self.net
            .blocks()
            .iter()
            .position(|blk| blk.name() == b || blk.name().starts_with(&dotted))
            .ok_or_else(|| self.unknown_layer(b))
    }

    pub fn apply_freeze(&mut self, policy: FreezePolicy) -> Result<()> {
        let from = match policy {
            FreezePolicy::None => 0,
            FreezePolicy::Backbone => self.head,
            FreezePolicy::UpToBoundary => self.boundary_index()?,
        };
        for i in 0..self.net.len() {
            self.net.set_trainable(i, i >= from);
        }
        self.spec.freeze_policy = policy;
        Ok(())
    }

    /// Names of parameter groups that receive updates, in network order.
    pub fn trainable_parameters(&self) -> Vec<&str> {
        self.parameter_groups()
            .into_iter()
            .filter(|(_, t)| *t)
            .map(|(n, _)| n)
            .collect()
    }

    /// Every block holding parameters, with its trainable flag.
    pub fn parameter_groups(&self) -> Vec<(&str, bool)> {
        self.net
            .blocks()
            .iter()
            .filter(|b| b.has_params())
            .map(|b| (b.name(), b.is_trainable()))
            .collect()
    }

    pub fn layer_names(&self) -> Vec<&str> {
        self.net.block_names()
    }

    fn unknown_layer(&self, name: &str) -> Error {
        Error::UnknownLayer {
            name: name.to_string(),
            available: self.layer_names().iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn resolve_layer(&self, sel: &LayerSelector) -> Result<LayerHandle> {
        let name = self.spec.profile.cam_layer(sel);
        let index = self.net.index_of(name).ok_or_else(|| self.unknown_layer(name))?;
        if index >= self.head {
            return Err(Error::InvalidArgument(format!(
                "layer `{name}` is not a feature layer"
            )));
        }
        Ok(LayerHandle {
            index,
            name: name.to_string(),
        })
    }

    /// Inference-mode logits, shape (batch, num_classes).
    pub fn logits(&mut self, x: &Array4<f32>) -> Array2<f32> {
        let out = self.net.forward(x, &Pass::inference()).output;
        to_logits(out)
    }

    /// SHA-256 over every tensor name and value, in network order.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        self.net.visit(&mut |name, slot| {
            h.update(name.as_bytes());
            for v in slot.tensor().iter() {
                h.update(v.to_le_bytes());
            }
        });
        hex::encode(h.finalize())
    }

    /// SHA-256 over the tensors of one block.
    pub fn group_fingerprint(&self, block: usize) -> String {
        let mut h = Sha256::new();
        self.net.visit_block(block, &mut |name, slot| {
            h.update(name.as_bytes());
            for v in slot.tensor().iter() {
                h.update(v.to_le_bytes());
            }
        });
        hex::encode(h.finalize())
    }
}

/// `(N, C, 1, 1)` network output to an `(N, C)` matrix.
pub fn to_logits(out: Array4<f32>) -> Array2<f32> {
    let (n, c, h, w) = out.dim();
    assert_eq!((h, w), (1, 1), "classifier output must be (N, C, 1, 1)");
    out.into_shape_with_order((n, c))
        .expect("contiguous logits")
        .into_dimensionality::<Ix2>()
        .expect("two dimensions")
}
