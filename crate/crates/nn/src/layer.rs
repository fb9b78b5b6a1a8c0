use ndarray::Array4;
use rand_chacha::ChaCha8Rng;

use crate::param::{Slot, SlotMut};

/// Per-pass switches handed down the layer tree during a forward pass.
pub struct ForwardCtx<'r> {
    /// Batch statistics for normalization and active dropout.
    pub train: bool,
    /// Keep whatever the backward pass will need.
    pub record: bool,
    pub rng: &'r mut ChaCha8Rng,
}

#[derive(Debug, Clone, Copy)]
pub struct BackwardCtx {
    /// Whether the caller needs the gradient with respect to the input.
    pub input_grad: bool,
    /// Accumulate into the gradient buffers of trainable parameters.
    pub param_grads: bool,
}

impl BackwardCtx {
    pub fn with_input_grad(self) -> Self {
        Self {
            input_grad: true,
            ..self
        }
    }
}

/// A differentiable map between NCHW activations.
///
/// `backward` consumes the state recorded by the latest `forward` with
/// `record = true`; calling it without one is a programming error.
pub trait Layer: Send {
    fn forward(&mut self, x: &Array4<f32>, ctx: &mut ForwardCtx<'_>) -> Array4<f32>;

    fn backward(&mut self, grad: &Array4<f32>, ctx: BackwardCtx) -> Option<Array4<f32>>;

    fn visit(&self, _prefix: &str, _f: &mut dyn FnMut(&str, Slot<'_>)) {}

    fn visit_mut(&mut self, _prefix: &str, _f: &mut dyn FnMut(&str, SlotMut<'_>)) {}

    /// Drop recorded forward state.
    fn clear(&mut self) {}
}

pub(crate) fn missing_record(layer: &str) -> ! {
    panic!("{layer}: backward called without a recorded forward pass")
}
