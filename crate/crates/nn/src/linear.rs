use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, Array4, ArrayView2, ArrayViewMut2, Axis};

use crate::layer::{missing_record, BackwardCtx, ForwardCtx, Layer};
use crate::param::{join, Param, Slot, SlotMut};

/// Fully connected layer on `(N, in, 1, 1)` activations, weight `[out, in]`.
pub struct Linear {
    in_features: usize,
    out_features: usize,
    pub weight: Param,
    pub bias: Param,
    input: Option<Array2<f32>>,
}

impl Linear {
    pub fn new(in_features: usize, out_features: usize) -> Self {
        Self {
            in_features,
            out_features,
            weight: Param::zeros(&[out_features, in_features]),
            bias: Param::zeros(&[out_features]),
            input: None,
        }
    }

    pub fn in_features(&self) -> usize {
        self.in_features
    }

    pub fn out_features(&self) -> usize {
        self.out_features
    }

    fn weight_matrix(&self) -> ArrayView2<'_, f32> {
        ArrayView2::from_shape(
            (self.out_features, self.in_features),
            self.weight.value.as_slice().unwrap(),
        )
        .unwrap()
    }
}

fn flat(x: &Array4<f32>) -> Array2<f32> {
    let (n, c, h, w) = x.dim();
    x.as_standard_layout()
        .to_owned()
        .into_shape_with_order((n, c * h * w))
        .unwrap()
}

impl Layer for Linear {
    fn forward(&mut self, x: &Array4<f32>, ctx: &mut ForwardCtx<'_>) -> Array4<f32> {
        let (n, c, h, w) = x.dim();
        assert_eq!(
            c * h * w,
            self.in_features,
            "linear layer expects {} features",
            self.in_features
        );
        let xm = flat(x);
        let mut y = Array2::<f32>::zeros((n, self.out_features));
        general_mat_mul(1.0, &xm, &self.weight_matrix().t(), 0.0, &mut y);
        y += &self
            .bias
            .value
            .view()
            .into_dimensionality::<ndarray::Ix1>()
            .unwrap();
        self.input = ctx.record.then_some(xm);
        y.into_shape_with_order((n, self.out_features, 1, 1)).unwrap()
    }

    fn backward(&mut self, grad: &Array4<f32>, ctx: BackwardCtx) -> Option<Array4<f32>> {
        let xm = self.input.take().unwrap_or_else(|| missing_record("Linear"));
        let n = grad.dim().0;
        let g = grad
            .as_standard_layout()
            .to_owned()
            .into_shape_with_order((n, self.out_features))
            .unwrap();
        if ctx.param_grads {
            if let Some(dw) = self.weight.grad_mut() {
                let mut dwv = ArrayViewMut2::from_shape(
                    (self.out_features, self.in_features),
                    dw.as_slice_mut().unwrap(),
                )
                .unwrap();
                general_mat_mul(1.0, &g.t(), &xm, 1.0, &mut dwv);
            }
            if let Some(db) = self.bias.grad_mut() {
                let s = g.sum_axis(Axis(0));
                for (d, v) in db.iter_mut().zip(s.iter()) {
                    *d += v;
                }
            }
        }
        if !ctx.input_grad {
            return None;
        }
        let mut dx = Array2::<f32>::zeros((n, self.in_features));
        general_mat_mul(1.0, &g, &self.weight_matrix(), 0.0, &mut dx);
        Some(dx.into_shape_with_order((n, self.in_features, 1, 1)).unwrap())
    }

    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, Slot<'_>)) {
        f(&join(prefix, "weight"), Slot::Param(&self.weight));
        f(&join(prefix, "bias"), Slot::Param(&self.bias));
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, SlotMut<'_>)) {
        f(&join(prefix, "weight"), SlotMut::Param(&mut self.weight));
        f(&join(prefix, "bias"), SlotMut::Param(&mut self.bias));
    }

    fn clear(&mut self) {
        self.input = None;
    }
}

/// `(N, C, H, W)` to `(N, C*H*W, 1, 1)`.
#[derive(Default)]
pub struct Flatten {
    input_dim: Option<(usize, usize, usize, usize)>,
}

impl Flatten {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Layer for Flatten {
    fn forward(&mut self, x: &Array4<f32>, ctx: &mut ForwardCtx<'_>) -> Array4<f32> {
        let (n, c, h, w) = x.dim();
        self.input_dim = ctx.record.then_some((n, c, h, w));
        x.as_standard_layout()
            .to_owned()
            .into_shape_with_order((n, c * h * w, 1, 1))
            .unwrap()
    }

    fn backward(&mut self, grad: &Array4<f32>, ctx: BackwardCtx) -> Option<Array4<f32>> {
        let dim = self
            .input_dim
            .take()
            .unwrap_or_else(|| missing_record("Flatten"));
        ctx.input_grad.then(|| {
            grad.as_standard_layout()
                .to_owned()
                .into_shape_with_order(dim)
                .unwrap()
        })
    }

    fn clear(&mut self) {
        self.input_dim = None;
    }
}
