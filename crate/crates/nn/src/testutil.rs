//! Finite-difference checks shared by the layer tests.

use ndarray::{Array4, ArrayD, IxDyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::layer::{BackwardCtx, ForwardCtx, Layer};
use crate::param::SlotMut;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn seeded_array(shape: &[usize], seed: u64) -> ArrayD<f32> {
    let mut r = rng(seed);
    ArrayD::from_shape_fn(IxDyn(shape), |_| r.random_range(-1.0f32..1.0))
}

fn objective(layer: &mut dyn Layer, x: &Array4<f32>, r: &Array4<f32>, train: bool) -> f64 {
    let mut g = rng(4242);
    let mut ctx = ForwardCtx { train, record: false, rng: &mut g };
    let y = layer.forward(x, &mut ctx);
    y.iter().zip(r.iter()).map(|(a, b)| *a as f64 * *b as f64).sum()
}

fn close(num: f64, ana: f64) -> bool {
    (num - ana).abs() <= 2e-2 * num.abs().max(ana.abs()).max(0.05)
}

/// One-sided slopes agree, i.e. the probe did not straddle a ReLU or
/// max-pool kink.
fn smooth(up: f64, mid: f64, down: f64, h: f32) -> bool {
    let fwd = (up - mid) / h as f64;
    let bwd = (mid - down) / h as f64;
    close(fwd, bwd)
}

/// Compares input and parameter gradients against central differences of
/// `sum(r * layer(x))` for a random `r`.
pub fn grad_check_mode(layer: &mut dyn Layer, shape: &[usize], seed: u64, train: bool) {
    let x: Array4<f32> = seeded_array(shape, seed).into_dimensionality().unwrap();
    let mut g = rng(4242);
    let y = {
        let mut ctx = ForwardCtx { train, record: true, rng: &mut g };
        layer.forward(&x, &mut ctx)
    };
    let r: Array4<f32> = seeded_array(y.shape(), seed + 1).into_dimensionality().unwrap();
    layer.visit_mut("", &mut |_, s| {
        if let SlotMut::Param(p) = s {
            p.set_trainable(true);
            p.zero_grad();
        }
    });
    let dx = layer
        .backward(&r, BackwardCtx { input_grad: true, param_grads: true })
        .expect("input gradient");
    let h = 1e-2f32;
    let base = objective(layer, &x, &r, train);
    let xs = x.as_slice().unwrap();
    let (mut checked, mut total) = (0, 0);
    for i in (0..xs.len()).step_by((xs.len() / 40).max(1)) {
        let mut xp = x.clone();
        xp.as_slice_mut().unwrap()[i] += h;
        let mut xm = x.clone();
        xm.as_slice_mut().unwrap()[i] -= h;
        let up = objective(layer, &xp, &r, train);
        let down = objective(layer, &xm, &r, train);
        total += 1;
        if !smooth(up, base, down, h) {
            continue;
        }
        checked += 1;
        let num = (up - down) / (2.0 * h as f64);
        let ana = dx.as_slice().unwrap()[i] as f64;
        assert!(close(num, ana), "input[{i}]: numeric {num} analytic {ana}");
    }
    assert!(2 * checked >= total, "too many non-smooth probes: {checked}/{total}");
    let mut names = Vec::new();
    layer.visit_mut("", &mut |n, s| {
        if let SlotMut::Param(p) = s {
            names.push((n.to_string(), p.grad().unwrap().clone()));
        }
    });
    for (name, grad) in names {
        let len = grad.len();
        for i in (0..len).step_by((len / 10).max(1)) {
            let eval = |delta: f32, layer: &mut dyn Layer| {
                layer.visit_mut("", &mut |n, s| {
                    if let SlotMut::Param(p) = s {
                        if n == name {
                            p.value.as_slice_mut().unwrap()[i] += delta;
                        }
                    }
                });
            };
            eval(h, layer);
            let up = objective(layer, &x, &r, train);
            eval(-2.0 * h, layer);
            let down = objective(layer, &x, &r, train);
            eval(h, layer);
            if !smooth(up, base, down, h) {
                continue;
            }
            let num = (up - down) / (2.0 * h as f64);
            let ana = grad.as_slice().unwrap()[i] as f64;
            assert!(close(num, ana), "{name}[{i}]: numeric {num} analytic {ana}");
        }
    }
}

pub fn grad_check(layer: &mut dyn Layer, shape: &[usize], seed: u64) {
    grad_check_mode(layer, shape, seed, false)
}

