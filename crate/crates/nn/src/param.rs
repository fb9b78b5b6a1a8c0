use ndarray::{ArrayD, IxDyn};

/// A learnable tensor. The gradient buffer exists only while the parameter
/// is trainable, so frozen parameters carry no gradient memory.
#[derive(Debug, Clone)]
pub struct Param {
    pub value: ArrayD<f32>,
    grad: Option<ArrayD<f32>>,
}

impl Param {
    pub fn new(value: ArrayD<f32>) -> Self {
        Self { value, grad: None }
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::new(ArrayD::zeros(IxDyn(shape)))
    }

    pub fn is_trainable(&self) -> bool {
        self.grad.is_some()
    }

    pub fn set_trainable(&mut self, on: bool) {
        match (on, self.grad.is_some()) {
            (true, false) => self.grad = Some(ArrayD::zeros(self.value.raw_dim())),
            (false, true) => self.grad = None,
            _ => {}
        }
    }

    pub fn grad(&self) -> Option<&ArrayD<f32>> {
        self.grad.as_ref()
    }

    pub fn grad_mut(&mut self) -> Option<&mut ArrayD<f32>> {
        self.grad.as_mut()
    }

    /// Value and gradient borrowed together, for optimizer updates.
    pub fn split_mut(&mut self) -> (&mut ArrayD<f32>, Option<&mut ArrayD<f32>>) {
        (&mut self.value, self.grad.as_mut())
    }

    pub fn zero_grad(&mut self) {
        if let Some(g) = self.grad.as_mut() {
            g.fill(0.0);
        }
    }

    pub fn shape(&self) -> &[usize] {
        self.value.shape()
    }
}

/// Read-only view of one named piece of layer state.
pub enum Slot<'a> {
    Param(&'a Param),
    Buffer(&'a ArrayD<f32>),
}

impl Slot<'_> {
    pub fn tensor(&self) -> &ArrayD<f32> {
        match self {
            Slot::Param(p) => &p.value,
            Slot::Buffer(b) => b,
        }
    }
}

pub enum SlotMut<'a> {
    Param(&'a mut Param),
    Buffer(&'a mut ArrayD<f32>),
}

impl SlotMut<'_> {
    pub fn tensor_mut(&mut self) -> &mut ArrayD<f32> {
        match self {
            SlotMut::Param(p) => &mut p.value,
            SlotMut::Buffer(b) => b,
        }
    }
}

/// Dotted state-dict name; an empty segment adds nothing.
pub fn join(prefix: &str, name: &str) -> String {
    match (prefix.is_empty(), name.is_empty()) {
        (_, true) => prefix.to_string(),
        (true, false) => name.to_string(),
        (false, false) => format!("{prefix}.{name}"),
    }
}
