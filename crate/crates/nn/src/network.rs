use std::collections::BTreeMap;

use ndarray::{Array4, ArrayD};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{NnError, Result};
use crate::layer::{BackwardCtx, ForwardCtx, Layer};
use crate::param::{join, Slot, SlotMut};

/// A top-level named stage of a network. Blocks are the unit of freezing,
/// activation capture and parameter grouping.
pub struct Block {
    name: String,
    layer: Box<dyn Layer>,
    trainable: bool,
    has_params: bool,
}

impl Block {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_trainable(&self) -> bool {
        self.trainable
    }

    pub fn has_params(&self) -> bool {
        self.has_params
    }
}

/// How one forward pass should run.
#[derive(Debug, Clone, Copy)]
pub struct Pass {
    /// Training behaviour (batch statistics, dropout) for trainable blocks.
    /// Frozen blocks always run in inference mode so their state never moves.
    pub train: bool,
    /// Record backward state for blocks at or after this index.
    pub record_from: Option<usize>,
    /// Return a copy of this block's output.
    pub capture: Option<usize>,
    /// Seed for stochastic layers.
    pub seed: u64,
}

impl Pass {
    pub fn inference() -> Self {
        Self {
            train: false,
            record_from: None,
            capture: None,
            seed: 0,
        }
    }
}

pub struct ForwardOut {
    pub output: Array4<f32>,
    pub captured: Option<Array4<f32>>,
}

/// An ordered chain of named blocks.
#[derive(Default)]
pub struct Network {
    blocks: Vec<Block>,
}

impl Network {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, layer: impl Layer + 'static) {
        self.push_boxed(name, Box::new(layer));
    }

    pub fn push_boxed(&mut self, name: impl Into<String>, layer: Box<dyn Layer>) {
        let mut has_params = false;
        layer.visit("", &mut |_, s| has_params |= matches!(s, Slot::Param(_)));
        self.blocks.push(Block {
            name: name.into(),
            layer,
            trainable: false,
            has_params,
        });
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block_names(&self) -> Vec<&str> {
        self.blocks.iter().map(|b| b.name.as_str()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.blocks.iter().position(|b| b.name == name)
    }

    pub fn set_trainable(&mut self, idx: usize, on: bool) {
        let block = &mut self.blocks[idx];
        block.trainable = on;
        block.layer.visit_mut("", &mut |_, s| {
            if let SlotMut::Param(p) = s {
                p.set_trainable(on);
            }
        });
    }

    pub fn first_trainable(&self) -> Option<usize> {
        self.blocks.iter().position(|b| b.trainable && b.has_params)
    }

    pub fn forward(&mut self, x: &Array4<f32>, pass: &Pass) -> ForwardOut {
        let mut rng = ChaCha8Rng::seed_from_u64(pass.seed);
        let mut h = x.clone();
        let mut captured = None;
        for (i, block) in self.blocks.iter_mut().enumerate() {
            let mut ctx = ForwardCtx {
                train: pass.train && (block.trainable || !block.has_params),
                record: pass.record_from.is_some_and(|r| i >= r),
                rng: &mut rng,
            };
            h = block.layer.forward(&h, &mut ctx);
            if pass.capture == Some(i) {
                captured = Some(h.clone());
            }
        }
        ForwardOut {
            output: h,
            captured,
        }
    }

    /// Backpropagates `grad` (with respect to the network output) through
    /// blocks `to..len` in reverse. Returns the gradient with respect to
    /// the input of block `to` when `input_grad` is set.
    pub fn backward(
        &mut self,
        grad: Array4<f32>,
        to: usize,
        input_grad: bool,
        param_grads: bool,
    ) -> Option<Array4<f32>> {
        let mut g = grad;
        let last = self.blocks.len();
        for i in (to..last).rev() {
            let ctx = BackwardCtx {
                input_grad: i > to || input_grad,
                param_grads,
            };
            match self.blocks[i].layer.backward(&g, ctx) {
                Some(next) => g = next,
                None => {
                    self.clear();
                    return None;
                }
            }
        }
        self.clear();
        Some(g)
    }

    pub fn zero_grad(&mut self) {
        self.visit_mut(&mut |_, s| {
            if let SlotMut::Param(p) = s {
                p.zero_grad();
            }
        });
    }

    pub fn clear(&mut self) {
        for b in &mut self.blocks {
            b.layer.clear();
        }
    }

    pub fn visit(&self, f: &mut dyn FnMut(&str, Slot<'_>)) {
        for b in &self.blocks {
            b.layer.visit(&b.name, f);
        }
    }

    pub fn visit_mut(&mut self, f: &mut dyn FnMut(&str, SlotMut<'_>)) {
        for b in &mut self.blocks {
            b.layer.visit_mut(&b.name, f);
        }
    }

    pub fn visit_block(&self, idx: usize, f: &mut dyn FnMut(&str, Slot<'_>)) {
        let b = &self.blocks[idx];
        b.layer.visit(&b.name, f);
    }

    pub fn visit_block_mut(&mut self, idx: usize, f: &mut dyn FnMut(&str, SlotMut<'_>)) {
        let b = &mut self.blocks[idx];
        b.layer.visit_mut(&b.name, f);
    }

    /// Every parameter and buffer, in network order.
    pub fn state(&self) -> Vec<(String, ArrayD<f32>)> {
        let mut out = Vec::new();
        self.visit(&mut |name, s| out.push((name.to_string(), s.tensor().clone())));
        out
    }

    pub fn param_count(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_, s| {
            if let Slot::Param(p) = s {
                n += p.value.len();
            }
        });
        n
    }

    /// Copies matching tensors from `tensors` into the network, for every
    /// state name accepted by `select`. Every selected name must be present
    /// with the right shape. Returns the number of tensors loaded.
    pub fn load_state(
        &mut self,
        tensors: &BTreeMap<String, ArrayD<f32>>,
        select: impl Fn(&str) -> bool,
    ) -> Result<usize> {
        let mut loaded = 0;
        let mut failure = None;
        self.visit_mut(&mut |name, mut slot| {
            if failure.is_some() || !select(name) {
                return;
            }
            let dst = slot.tensor_mut();
            match tensors.get(name) {
                None => failure = Some(NnError::MissingTensor(name.to_string())),
                Some(src) if src.shape() != dst.shape() => {
                    failure = Some(NnError::ShapeMismatch {
                        name: name.to_string(),
                        expected: dst.shape().to_vec(),
                        found: src.shape().to_vec(),
                    })
                }
                Some(src) => {
                    dst.assign(src);
                    loaded += 1;
                }
            }
        });
        match failure {
            Some(e) => Err(e),
            None => Ok(loaded),
        }
    }
}

/// Full state-dict name of a block-relative tensor.
pub fn state_name(block: &str, tensor: &str) -> String {
    join(block, tensor)
}
