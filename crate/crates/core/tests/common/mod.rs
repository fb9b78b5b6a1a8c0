//! A two-layer toy CNN with hand-set weights and a direct f64 evaluation
//! of Grad-CAM on it.

#![allow(dead_code)]

use cxrlens_nn::{AdaptiveAvgPool2d, Conv2d, Conv2dConfig, Flatten, Linear, Network, Relu};
use ndarray::{Array1, Array2, Array3, Array4, ArrayD};

pub const CAPTURE: usize = 1;

#[derive(Debug, Clone)]
pub struct Toy {
    pub conv_w: Array4<f64>,
    pub conv_b: Array1<f64>,
    pub fc_w: Array2<f64>,
    pub fc_b: Array1<f64>,
}

impl Toy {
    /// Two 3x3 filters over three channels, three outputs. Values are
    /// small binary fractions so the f32 forward pass is exact.
    pub fn known() -> Self {
        let conv_w = Array4::from_shape_fn((2, 3, 3, 3), |(k, c, u, v)| {
            let s = (k * 27 + c * 9 + u * 3 + v) as f64;
            ((s * 7.0) % 9.0 - 4.0) * 0.125
        });
        Self {
            conv_w,
            conv_b: Array1::from(vec![0.25, -0.5]),
            fc_w: ndarray::arr2(&[[1.0, -0.5], [-0.75, 2.0], [0.5, 0.5]]),
            fc_b: Array1::from(vec![0.0, 0.125, -0.25]),
        }
    }

    pub fn network(&self) -> Network {
        let mut conv = Conv2d::new(Conv2dConfig::new(3, 2, 3).with_bias(true));
        conv.weight.value = to_f32(self.conv_w.clone().into_dyn());
        conv.bias.as_mut().unwrap().value = to_f32(self.conv_b.clone().into_dyn());
        let mut fc = Linear::new(2, 3);
        fc.weight.value = to_f32(self.fc_w.clone().into_dyn());
        fc.bias.value = to_f32(self.fc_b.clone().into_dyn());
        let mut net = Network::new();
        net.push("conv", conv);
        net.push("relu", Relu::new());
        net.push("pool", AdaptiveAvgPool2d::new(1, 1));
        net.push("flatten", Flatten::new());
        net.push("fc", fc);
        net
    }
}

fn to_f32(a: ArrayD<f64>) -> ArrayD<f32> {
    a.mapv(|v| v as f32)
}

pub fn input(h: usize, w: usize) -> Array3<f32> {
    Array3::from_shape_fn((3, h, w), |(c, y, x)| (((c * 5 + y * 3 + x * 11) % 17) as f32 - 8.0) * 0.125)
}

/// Grad-CAM on the toy network evaluated by hand. Returns the normalized
/// map at input resolution, at layer resolution, and the raw maximum.
pub fn symbolic_cam(toy: &Toy, image: &Array3<f32>, class: usize) -> (Array2<f64>, Array2<f64>, f64) {
    let (_, h, w) = image.dim();
    let (oh, ow) = (h - 2, w - 2);
    let x = image.mapv(|v| v as f64);
    let mut acts = Array3::<f64>::zeros((2, oh, ow));
    for k in 0..2 {
        for i in 0..oh {
            for j in 0..ow {
                let mut s = toy.conv_b[k];
                for c in 0..3 {
                    for u in 0..3 {
                        for v in 0..3 {
                            s += toy.conv_w[[k, c, u, v]] * x[[c, i + u, j + v]];
                        }
                    }
                }
                acts[[k, i, j]] = s.max(0.0);
            }
        }
    }
    // d logit / d A[k, i, j] = fc_w[class, k] / (oh * ow) at every position,
    // so the spatial mean of the gradient is that same constant
    let weights: Vec<f64> = (0..2).map(|k| toy.fc_w[[class, k]] / (oh * ow) as f64).collect();
    let mut raw = Array2::<f64>::zeros((oh, ow));
    for k in 0..2 {
        for i in 0..oh {
            for j in 0..ow {
                raw[[i, j]] += weights[k] * acts[[k, i, j]];
            }
        }
    }
    raw.mapv_inplace(|v| v.max(0.0));
    let max = raw.iter().cloned().fold(0.0, f64::max);
    let low = if max > 0.0 { raw.mapv(|v| v / max) } else { raw };
    (upsample(&low, h, w), low, max)
}

/// Bilinear resampling with half-pixel centres and clamped edges.
pub fn upsample(src: &Array2<f64>, h: usize, w: usize) -> Array2<f64> {
    let (sh, sw) = src.dim();
    let coord = |o: usize, out: usize, len: usize| {
        let p = ((o as f64 + 0.5) * len as f64 / out as f64 - 0.5).max(0.0);
        let i0 = (p.floor() as usize).min(len - 1);
        (i0, (i0 + 1).min(len - 1), p - i0 as f64)
    };
    Array2::from_shape_fn((h, w), |(y, x)| {
        let (y0, y1, fy) = coord(y, h, sh);
        let (x0, x1, fx) = coord(x, w, sw);
        let top = src[[y0, x0]] * (1.0 - fx) + src[[y0, x1]] * fx;
        let bottom = src[[y1, x0]] * (1.0 - fx) + src[[y1, x1]] * fx;
        top * (1.0 - fy) + bottom * fy
    })
}

pub fn max_abs_diff(a: &Array2<f32>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (*x as f64 - y).abs()).fold(0.0, f64::max)
}

/// AUC by enumerating positive/negative pairs.
pub fn brute_auc(s: &[f64], t: &[f64]) -> Option<f64> {
    let (mut num, mut pairs) = (0.0, 0usize);
    for i in 0..s.len() {
        for j in 0..s.len() {
            if t[i] == 1.0 && t[j] == 0.0 {
                pairs += 1;
                if s[i] > s[j] {
                    num += 1.0;
                } else if s[i] == s[j] {
                    num += 0.5;
                }
            }
        }
    }
    (pairs > 0).then(|| num / pairs as f64)
}

/// F1 by counting the confusion matrix; an empty denominator scores 0.
pub fn brute_f1(p: &[f64], t: &[f64], threshold: f64) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (p, t) in p.iter().zip(t) {
        let pred = *p >= threshold;
        let pos = *t == 1.0;
        tp += (pred && pos) as usize;
        fp += (pred && !pos) as usize;
        fn_ += (!pred && pos) as usize;
    }
    if 2 * tp + fp + fn_ == 0 {
        0.0
    } else {
        (2 * tp) as f64 / (2 * tp + fp + fn_) as f64
    }
}
