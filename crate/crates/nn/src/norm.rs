use ndarray::{Array1, Array4, ArrayD, IxDyn};

use crate::layer::{missing_record, BackwardCtx, ForwardCtx, Layer};
use crate::param::{join, Param, Slot, SlotMut};

struct Record {
    xhat: Array4<f32>,
    inv_std: Array1<f32>,
    batch_stats: bool,
}

/// Per-channel batch normalization. Running statistics follow the usual
/// exponential update with the unbiased batch variance.
pub struct BatchNorm2d {
    channels: usize,
    eps: f32,
    momentum: f32,
    pub weight: Param,
    pub bias: Param,
    pub running_mean: ArrayD<f32>,
    pub running_var: ArrayD<f32>,
    record: Option<Record>,
}

impl BatchNorm2d {
    pub fn new(channels: usize, eps: f32) -> Self {
        Self {
            channels,
            eps,
            momentum: 0.1,
            weight: Param::new(ArrayD::ones(IxDyn(&[channels]))),
            bias: Param::zeros(&[channels]),
            running_mean: ArrayD::zeros(IxDyn(&[channels])),
            running_var: ArrayD::ones(IxDyn(&[channels])),
            record: None,
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }
}

impl Layer for BatchNorm2d {
    fn forward(&mut self, x: &Array4<f32>, ctx: &mut ForwardCtx<'_>) -> Array4<f32> {
        let (n, c, h, w) = x.dim();
        assert_eq!(c, self.channels, "batch norm channel mismatch");
        let plane = h * w;
        let count = n * plane;
        let xs = x.as_standard_layout();
        let xs = xs.as_slice().unwrap();
        let mut mean = vec![0.0f32; c];
        let mut inv_std = Array1::<f32>::zeros(c);
        if ctx.train {
            let rm = self.running_mean.as_slice_mut().unwrap();
            let rv = self.running_var.as_slice_mut().unwrap();
            for ch in 0..c {
                let mut s = 0.0f64;
                for b in 0..n {
                    s += xs[(b * c + ch) * plane..][..plane]
                        .iter()
                        .map(|v| *v as f64)
                        .sum::<f64>();
                }
                let m = s / count as f64;
                let mut ss = 0.0f64;
                for b in 0..n {
                    ss += xs[(b * c + ch) * plane..][..plane]
                        .iter()
                        .map(|v| (*v as f64 - m).powi(2))
                        .sum::<f64>();
                }
                let var = ss / count as f64;
                mean[ch] = m as f32;
                inv_std[ch] = 1.0 / ((var as f32) + self.eps).sqrt();
                // A single value per channel carries no variance information,
                // so the running statistics are left alone.
                if count > 1 {
                    let unbiased = ss / (count - 1) as f64;
                    rm[ch] = (1.0 - self.momentum) * rm[ch] + self.momentum * m as f32;
                    rv[ch] = (1.0 - self.momentum) * rv[ch] + self.momentum * unbiased as f32;
                }
            }
        } else {
            let rm = self.running_mean.as_slice().unwrap();
            let rv = self.running_var.as_slice().unwrap();
            for ch in 0..c {
                mean[ch] = rm[ch];
                inv_std[ch] = 1.0 / (rv[ch] + self.eps).sqrt();
            }
        }
        let gamma = self.weight.value.as_slice().unwrap();
        let beta = self.bias.value.as_slice().unwrap();
        let mut xhat = Array4::<f32>::zeros((n, c, h, w));
        let mut y = Array4::<f32>::zeros((n, c, h, w));
        {
            let xh = xhat.as_slice_mut().unwrap();
            let ys = y.as_slice_mut().unwrap();
            for b in 0..n {
                for ch in 0..c {
                    let off = (b * c + ch) * plane;
                    for i in off..off + plane {
                        let v = (xs[i] - mean[ch]) * inv_std[ch];
                        xh[i] = v;
                        ys[i] = v * gamma[ch] + beta[ch];
                    }
                }
            }
        }
        self.record = ctx.record.then_some(Record {
            xhat,
            inv_std,
            batch_stats: ctx.train,
        });
        y
    }

    fn backward(&mut self, grad: &Array4<f32>, ctx: BackwardCtx) -> Option<Array4<f32>> {
        let rec = self
            .record
            .take()
            .unwrap_or_else(|| missing_record("BatchNorm2d"));
        let (n, c, h, w) = grad.dim();
        let plane = h * w;
        let count = (n * plane) as f32;
        let gs = grad.as_standard_layout();
        let gs = gs.as_slice().unwrap();
        let xh = rec.xhat.as_slice().unwrap();
        let mut sum_dy = vec![0.0f32; c];
        let mut sum_dy_xhat = vec![0.0f32; c];
        for b in 0..n {
            for ch in 0..c {
                let off = (b * c + ch) * plane;
                for i in off..off + plane {
                    sum_dy[ch] += gs[i];
                    sum_dy_xhat[ch] += gs[i] * xh[i];
                }
            }
        }
        if ctx.param_grads {
            if let Some(dg) = self.weight.grad_mut() {
                for (d, s) in dg.as_slice_mut().unwrap().iter_mut().zip(&sum_dy_xhat) {
                    *d += s;
                }
            }
            if let Some(db) = self.bias.grad_mut() {
                for (d, s) in db.as_slice_mut().unwrap().iter_mut().zip(&sum_dy) {
                    *d += s;
                }
            }
        }
        if !ctx.input_grad {
            return None;
        }
        let gamma = self.weight.value.as_slice().unwrap();
        let mut dx = Array4::<f32>::zeros((n, c, h, w));
        let ds = dx.as_slice_mut().unwrap();
        for b in 0..n {
            for ch in 0..c {
                let off = (b * c + ch) * plane;
                let k = gamma[ch] * rec.inv_std[ch];
                if rec.batch_stats {
                    let m_dy = sum_dy[ch] / count;
                    let m_dyx = sum_dy_xhat[ch] / count;
                    for i in off..off + plane {
                        ds[i] = k * (gs[i] - m_dy - xh[i] * m_dyx);
                    }
                } else {
                    for i in off..off + plane {
                        ds[i] = k * gs[i];
                    }
                }
            }
        }
        Some(dx)
    }

    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, Slot<'_>)) {
        f(&join(prefix, "weight"), Slot::Param(&self.weight));
        f(&join(prefix, "bias"), Slot::Param(&self.bias));
        f(&join(prefix, "running_mean"), Slot::Buffer(&self.running_mean));
        f(&join(prefix, "running_var"), Slot::Buffer(&self.running_var));
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, SlotMut<'_>)) {
        f(&join(prefix, "weight"), SlotMut::Param(&mut self.weight));
        f(&join(prefix, "bias"), SlotMut::Param(&mut self.bias));
        f(&join(prefix, "running_mean"), SlotMut::Buffer(&mut self.running_mean));
        f(&join(prefix, "running_var"), SlotMut::Buffer(&mut self.running_var));
    }

    fn clear(&mut self) {
        self.record = None;
    }
}
