//! Per-architecture constants.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub const IMAGENET_MEAN: [f32; 3] = [0.485, 0.456, 0.406];
pub const IMAGENET_STD: [f32; 3] = [0.229, 0.224, 0.225];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arch {
    Alexnet,
    Resnet152,
    InceptionV3,
}

impl Arch {
    pub const ALL: [Arch; 3] = [Arch::Alexnet, Arch::Resnet152, Arch::InceptionV3];

    pub fn name(self) -> &'static str {
        match self {
            Arch::Alexnet => "alexnet",
            Arch::Resnet152 => "resnet152",
            Arch::InceptionV3 => "inception_v3",
        }
    }

    /// Input resolution the architecture was designed for.
    pub fn canonical_input_size(self) -> usize {
        match self {
            Arch::Alexnet | Arch::Resnet152 => 224,
            Arch::InceptionV3 => 299,
        }
    }

    /// Smallest input for which every stage keeps a non-empty feature map.
    pub fn min_input_size(self) -> usize {
        match self {
            Arch::Alexnet => 63,
            Arch::Resnet152 => 32,
            Arch::InceptionV3 => 75,
        }
    }

    /// Input size for reduced-scale runs on a CPU.
    pub fn desk_input_size(self) -> usize {
        match self {
            Arch::Alexnet => 96,
            Arch::Resnet152 => 64,
            Arch::InceptionV3 => 107,
        }
    }
}

/// Channel divisor for reduced-scale runs on a CPU.
pub const DESK_WIDTH_DIVISOR: usize = 8;

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Arch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Arch::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::UnknownArch(s.to_string()))
    }
}

/// Layer depth for activation maps.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LayerSelector {
    Early,
    Middle,
    Final,
    Named(String),
}

impl LayerSelector {
    pub const DEPTHS: [LayerSelector; 3] =
        [LayerSelector::Early, LayerSelector::Middle, LayerSelector::Final];

    /// Short tag used in file names.
    pub fn tag(&self) -> &str {
        match self {
            LayerSelector::Early => "early",
            LayerSelector::Middle => "middle",
            LayerSelector::Final => "final",
            LayerSelector::Named(n) => n,
        }
    }
}

impl FromStr for LayerSelector {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "early" => LayerSelector::Early,
            "middle" => LayerSelector::Middle,
            "final" => LayerSelector::Final,
            other => LayerSelector::Named(other.to_string()),
        })
    }
}

impl fmt::Display for LayerSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CamLayers {
    pub early: String,
    pub middle: String,
    #[serde(rename = "final")]
    pub last: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchProfile {
    pub arch: Arch,
    pub input_size: usize,
    pub norm_mean: [f32; 3],
    pub norm_std: [f32; 3],
    /// First block (by name prefix) of the trainable suffix.
    pub freeze_boundary: String,
    pub cam_layers: CamLayers,
}

impl ArchProfile {
    pub fn new(arch: Arch) -> Self {
        let (boundary, early, middle, last) = match arch {
            Arch::Alexnet => ("classifier", "features.1", "features.7", "features.11"),
            Arch::Resnet152 => ("layer4", "layer1.0", "layer2.7", "layer4.2"),
            Arch::InceptionV3 => ("Mixed_7c", "Conv2d_2b_3x3", "Mixed_6e", "Mixed_7c"),
        };
        Self {
            arch,
            input_size: arch.canonical_input_size(),
            norm_mean: IMAGENET_MEAN,
            norm_std: IMAGENET_STD,
            freeze_boundary: boundary.to_string(),
            cam_layers: CamLayers {
                early: early.to_string(),
                middle: middle.to_string(),
                last: last.to_string(),
            },
        }
    }

    pub fn with_input_size(mut self, size: usize) -> Self {
        self.input_size = size;
        self
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.input_size < self.arch.min_input_size() {
            return Err(Error::InvalidArgument(format!(
                "{} needs input_size >= {}, got {}",
                self.arch,
                self.arch.min_input_size(),
                self.input_size
            )));
        }
        if self.norm_std.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::InvalidArgument("norm_std must be positive".into()));
        }
        Ok(())
    }

    /// Block name for a symbolic depth; explicit names pass through.
    pub fn cam_layer<'a>(&'a self, sel: &'a LayerSelector) -> &'a str {
        match sel {
            LayerSelector::Early => &self.cam_layers.early,
            LayerSelector::Middle => &self.cam_layers.middle,
            LayerSelector::Final => &self.cam_layers.last,
            LayerSelector::Named(n) => n,
        }
    }
}
