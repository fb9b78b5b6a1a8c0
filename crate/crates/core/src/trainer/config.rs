use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::losses::LossConfig;
use crate::models::AdamSettings;
use crate::preprocess::Augmentation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    #[default]
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_train: usize,
    pub batch_eval: usize,
    pub base_lr: f64,
    pub lr_step_epochs: usize,
    pub lr_factor: f64,
    pub optimizer: Optimizer,
    pub adam: AdamSettings,
    pub loss: LossConfig,
    pub seed: u64,
    pub device: String,
    /// Random crop and flip on training batches.
    pub augment: bool,
    pub augmentation: Augmentation,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_train: 64,
            batch_eval: 32,
            base_lr: 1e-4,
            lr_step_epochs: 5,
            lr_factor: 0.1,
            optimizer: Optimizer::Adam,
            adam: AdamSettings::default(),
            loss: LossConfig::default(),
            seed: 0,
            device: "cpu".into(),
            augment: true,
            augmentation: Augmentation::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.epochs == 0 {
            return bad("epochs must be >= 1".into());
        }
        if self.batch_train == 0 || self.batch_eval == 0 {
            return bad("batch sizes must be >= 1".into());
        }
        if self.lr_step_epochs == 0 {
            return bad("lr_step_epochs must be >= 1".into());
        }
        if !(self.lr_factor > 0.0 && self.lr_factor < 1.0) {
            return bad(format!("lr_factor must be in (0, 1), got {}", self.lr_factor));
        }
        if !(self.base_lr > 0.0 && self.base_lr.is_finite()) {
            return bad(format!("base_lr must be positive, got {}", self.base_lr));
        }
        if self.device != "cpu" {
            return bad(format!("unsupported device `{}`; only `cpu` is available", self.device));
        }
        self.loss.validate()
    }

    /// Hash of every field that shapes the optimization trajectory. The
    /// epoch count is left out so a shorter run can be resumed into a
    /// longer one.
    pub fn trajectory_hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("serializable");
        v.as_object_mut().expect("struct").remove("epochs");
        hex::encode(Sha256::digest(v.to_string().as_bytes()))
    }
}

/// Learning rate for a zero-based epoch:
/// `base_lr * lr_factor ^ floor(epoch / lr_step_epochs)`, rounded to 12
/// significant digits so decade schedules produce exact decimal values.
pub fn lr_at(epoch: usize, cfg: &TrainConfig) -> f64 {
    let k = (epoch / cfg.lr_step_epochs) as i32;
    let raw = cfg.base_lr * cfg.lr_factor.powi(k);
    format!("{raw:.11e}").parse().expect("formatted float parses")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = TrainConfig::default();
        assert_eq!(
            (c.epochs, c.batch_train, c.batch_eval, c.lr_step_epochs),
            (20, 64, 32, 5)
        );
        assert_eq!((c.base_lr, c.lr_factor), (1e-4, 0.1));
        assert!(c.validate().is_ok());
    }

    #[test]
    fn schedule_examples() {
        let c = TrainConfig::default();
        assert_eq!(lr_at(0, &c), 1e-4);
        assert_eq!(lr_at(4, &c), 1e-4);
        assert_eq!(lr_at(5, &c), 1e-5);
        assert_eq!(lr_at(19, &c), 1e-7);
        let naive = 1e-4 * 0.1f64.powi(3);
        assert_ne!(naive, 1e-7, "rounding is needed for exact decades");
    }

    #[test]
    fn validation() {
        let ok = TrainConfig::default();
        for bad in [
            TrainConfig { epochs: 0, ..ok.clone() },
            TrainConfig { batch_eval: 0, ..ok.clone() },
            TrainConfig { lr_factor: 1.0, ..ok.clone() },
            TrainConfig { lr_factor: 0.0, ..ok.clone() },
            TrainConfig { device: "cuda".into(), ..ok.clone() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn trajectory_hash_ignores_epochs() {
        let a = TrainConfig::default();
        let b = TrainConfig { epochs: 3, ..a.clone() };
        let c = TrainConfig { seed: 1, ..a.clone() };
        assert_eq!(a.trajectory_hash(), b.trajectory_hash());
        assert_ne!(a.trajectory_hash(), c.trajectory_hash());
    }

    #[test]
    fn toml_round_trip() {
        let c = TrainConfig { seed: 9, ..TrainConfig::default() };
        let text = toml::to_string(&c).unwrap();
        assert_eq!(toml::from_str::<TrainConfig>(&text).unwrap(), c);
        assert!(toml::from_str::<TrainConfig>("epochz = 3").is_err());
    }
}
