use std::collections::BTreeMap;

use ndarray::{ArrayD, Zip};

use crate::error::{NnError, Result};
use crate::network::Network;
use crate::param::SlotMut;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
    /// L2 penalty added to the gradient before the moment updates.
    pub weight_decay: f32,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

/// Adam with bias correction. Only trainable parameters are touched, so a
/// frozen tensor keeps its exact bit pattern across steps.
pub struct Adam {
    cfg: AdamConfig,
    step: u64,
    moments: BTreeMap<String, (ArrayD<f32>, ArrayD<f32>)>,
}

impl Adam {
    pub fn new(cfg: AdamConfig) -> Self {
        Self {
            cfg,
            step: 0,
            moments: BTreeMap::new(),
        }
    }

    pub fn config(&self) -> AdamConfig {
        self.cfg
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Applies one update with learning rate `lr` and clears gradients.
    pub fn step(&mut self, net: &mut Network, lr: f32) {
        self.step += 1;
        let t = self.step as i32;
        let AdamConfig {
            beta1,
            beta2,
            eps,
            weight_decay,
        } = self.cfg;
        let bc1 = 1.0 - beta1.powi(t);
        let bc2_sqrt = (1.0 - beta2.powi(t)).sqrt();
        let step_size = lr / bc1;
        let moments = &mut self.moments;
        net.visit_mut(&mut |name, slot| {
            let SlotMut::Param(p) = slot else { return };
            let (value, Some(grad)) = p.split_mut() else { return };
            let (m, v) = moments
                .entry(name.to_string())
                .or_insert_with(|| (ArrayD::zeros(grad.raw_dim()), ArrayD::zeros(grad.raw_dim())));
            Zip::from(&mut *value)
                .and(&mut *grad)
                .and(m)
                .and(v)
                .for_each(|w, g, m, v| {
                    let g_eff = *g + weight_decay * *w;
                    *m = beta1 * *m + (1.0 - beta1) * g_eff;
                    *v = beta2 * *v + (1.0 - beta2) * g_eff * g_eff;
                    let denom = v.sqrt() / bc2_sqrt + eps;
                    *w -= step_size * *m / denom;
                    *g = 0.0;
                });
        });
    }

    /// Moment tensors as `<param>.exp_avg` / `<param>.exp_avg_sq`.
    pub fn state(&self) -> Vec<(String, ArrayD<f32>)> {
        let mut out = Vec::with_capacity(self.moments.len() * 2);
        for (name, (m, v)) in &self.moments {
            out.push((format!("{name}.exp_avg"), m.clone()));
            out.push((format!("{name}.exp_avg_sq"), v.clone()));
        }
        out
    }

    pub fn load_state(&mut self, step: u64, tensors: &BTreeMap<String, ArrayD<f32>>) -> Result<()> {
        let mut moments = BTreeMap::new();
        for (key, m) in tensors {
            let Some(name) = key.strip_suffix(".exp_avg") else {
                continue;
            };
            let vkey = format!("{name}.exp_avg_sq");
            let v = tensors
                .get(&vkey)
                .ok_or_else(|| NnError::MissingTensor(vkey.clone()))?;
            moments.insert(name.to_string(), (m.clone(), v.clone()));
        }
        self.step = step;
        self.moments = moments;
        Ok(())
    }
}
