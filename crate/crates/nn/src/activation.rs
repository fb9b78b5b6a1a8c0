use ndarray::{Array4, Zip};
use rand::Rng;

use crate::layer::{missing_record, BackwardCtx, ForwardCtx, Layer};

#[derive(Default)]
pub struct Relu {
    output: Option<Array4<f32>>,
}

impl Relu {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Layer for Relu {
    fn forward(&mut self, x: &Array4<f32>, ctx: &mut ForwardCtx<'_>) -> Array4<f32> {
        let y = x.mapv(|v| v.max(0.0));
        self.output = ctx.record.then(|| y.clone());
        y
    }

    fn backward(&mut self, grad: &Array4<f32>, ctx: BackwardCtx) -> Option<Array4<f32>> {
        let y = self.output.take().unwrap_or_else(|| missing_record("Relu"));
        if !ctx.input_grad {
            return None;
        }
        let mut dx = grad.to_owned();
        Zip::from(&mut dx).and(&y).for_each(|d, &o| {
            if o <= 0.0 {
                *d = 0.0;
            }
        });
        Some(dx)
    }

    fn clear(&mut self) {
        self.output = None;
    }
}

/// Inverted dropout: kept activations are scaled by `1 / (1 - p)` so the
/// evaluation path is the identity.
pub struct Dropout {
    p: f32,
    mask: Option<Option<Array4<f32>>>,
}

impl Dropout {
    pub fn new(p: f32) -> Self {
        assert!((0.0..1.0).contains(&p), "dropout probability must be in [0, 1)");
        Self { p, mask: None }
    }
}

impl Layer for Dropout {
    fn forward(&mut self, x: &Array4<f32>, ctx: &mut ForwardCtx<'_>) -> Array4<f32> {
        if !ctx.train || self.p == 0.0 {
            self.mask = ctx.record.then_some(None);
            return x.clone();
        }
        let keep = 1.0 - self.p;
        let mask = x.mapv(|_| {
            if ctx.rng.random::<f32>() < keep {
                1.0 / keep
            } else {
                0.0
            }
        });
        let y = x * &mask;
        self.mask = ctx.record.then_some(Some(mask));
        y
    }

    fn backward(&mut self, grad: &Array4<f32>, ctx: BackwardCtx) -> Option<Array4<f32>> {
        let mask = self.mask.take().unwrap_or_else(|| missing_record("Dropout"));
        if !ctx.input_grad {
            return None;
        }
        Some(match mask {
            Some(m) => grad * &m,
            None => grad.clone(),
        })
    }

    fn clear(&mut self) {
        self.mask = None;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{grad_check, rng};

    #[test]
    fn relu_gradient() {
        grad_check(&mut Relu::new(), &[2, 3, 4, 4], 1);
    }

    #[test]
    fn dropout_is_identity_in_eval_and_unbiased_in_train() {
        let x = Array4::<f32>::ones((4, 8, 8, 8));
        let mut d = Dropout::new(0.5);
        let mut r = rng(3);
        let y = d.forward(&x, &mut ForwardCtx { train: false, record: false, rng: &mut r });
        assert_eq!(y, x);
        let y = d.forward(&x, &mut ForwardCtx { train: true, record: false, rng: &mut r });
        let mean = y.mean().unwrap();
        assert!((mean - 1.0).abs() < 0.1, "{mean}");
        assert!(y.iter().all(|v| *v == 0.0 || *v == 2.0));
    }

    #[test]
    fn dropout_gradient_uses_same_mask() {
        grad_check(&mut Dropout::new(0.3), &[2, 4, 3, 3], 2);
    }
}
