use cxrlens_nn::init::{uniform_fan_in, uniform_weight};
use cxrlens_nn::{
    AdaptiveAvgPool2d, Conv2d, Conv2dConfig, Dropout, Flatten, Linear, MaxPool2d, Network, Relu,
};
use rand_chacha::ChaCha8Rng;

use super::Width;

fn conv(cfg: Conv2dConfig, rng: &mut ChaCha8Rng) -> Conv2d {
    let mut c = Conv2d::new(cfg.with_bias(true));
    uniform_weight(&mut c.weight.value, rng);
    let fan_in = cfg.in_channels * cfg.kernel.0 * cfg.kernel.1;
    if let Some(b) = c.bias.as_mut() {
        uniform_fan_in(&mut b.value, fan_in, rng);
    }
    c
}

pub(super) fn linear(inp: usize, out: usize, rng: &mut ChaCha8Rng) -> Linear {
    let mut l = Linear::new(inp, out);
    uniform_weight(&mut l.weight.value, rng);
    uniform_fan_in(&mut l.bias.value, inp, rng);
    l
}

/// Feature stack, 6x6 pooling and the three-layer classifier. Every layer is
/// its own block so single activations (e.g. `features.11`) can be captured.
pub(super) fn build(w: Width, num_classes: usize, rng: &mut ChaCha8Rng) -> Network {
    let mut net = Network::new();
    let (c1, c2, c3, c4, c5) = (w.of(64), w.of(192), w.of(384), w.of(256), w.of(256));
    net.push("features.0", conv(Conv2dConfig::new(3, c1, 11).stride(4).padding(2), rng));
    net.push("features.1", Relu::new());
    net.push("features.2", MaxPool2d::new(3, 2, 0));
    net.push("features.3", conv(Conv2dConfig::new(c1, c2, 5).padding(2), rng));
    net.push("features.4", Relu::new());
    net.push("features.5", MaxPool2d::new(3, 2, 0));
    net.push("features.6", conv(Conv2dConfig::new(c2, c3, 3).padding(1), rng));
    net.push("features.7", Relu::new());
    net.push("features.8", conv(Conv2dConfig::new(c3, c4, 3).padding(1), rng));
    net.push("features.9", Relu::new());
    net.push("features.10", conv(Conv2dConfig::new(c4, c5, 3).padding(1), rng));
    net.push("features.11", Relu::new());
    net.push("features.12", MaxPool2d::new(3, 2, 0));
    net.push("avgpool", AdaptiveAvgPool2d::new(6, 6));
    net.push("flatten", Flatten::new());
    let hidden = w.of(4096);
    net.push("classifier.0", Dropout::new(0.5));
    net.push("classifier.1", linear(c5 * 36, hidden, rng));
    net.push("classifier.2", Relu::new());
    net.push("classifier.3", Dropout::new(0.5));
    net.push("classifier.4", linear(hidden, hidden, rng));
    net.push("classifier.5", Relu::new());
    net.push("classifier.6", linear(hidden, num_classes, rng));
    net
}
