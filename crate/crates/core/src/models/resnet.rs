use cxrlens_nn::init::kaiming_normal_fan_out;
use cxrlens_nn::{
    AdaptiveAvgPool2d, BatchNorm2d, Conv2d, Conv2dConfig, Flatten, MaxPool2d, Network, Relu,
    Residual, Sequential,
};
use rand_chacha::ChaCha8Rng;

use super::alexnet::linear;
use super::Width;

const EXPANSION: usize = 4;
const BN_EPS: f32 = 1e-5;

/// Blocks per stage for the 152-layer variant.
pub(super) const LAYERS: [usize; 4] = [3, 8, 36, 3];

fn conv(cfg: Conv2dConfig, rng: &mut ChaCha8Rng) -> Conv2d {
    let mut c = Conv2d::new(cfg);
    kaiming_normal_fan_out(&mut c.weight.value, rng);
    c
}

fn bottleneck(inplanes: usize, planes: usize, stride: usize, rng: &mut ChaCha8Rng) -> Residual {
    let out = planes * EXPANSION;
    let main = Sequential::new()
        .add("conv1", conv(Conv2dConfig::new(inplanes, planes, 1), rng))
        .add("bn1", BatchNorm2d::new(planes, BN_EPS))
        .add("", Relu::new())
        .add(
            "conv2",
            conv(Conv2dConfig::new(planes, planes, 3).stride(stride).padding(1), rng),
        )
        .add("bn2", BatchNorm2d::new(planes, BN_EPS))
        .add("", Relu::new())
        .add("conv3", conv(Conv2dConfig::new(planes, out, 1), rng))
        .add("bn3", BatchNorm2d::new(out, BN_EPS));
    let block = Residual::new(main);
    if stride != 1 || inplanes != out {
        let proj = Sequential::new()
            .add("0", conv(Conv2dConfig::new(inplanes, out, 1).stride(stride), rng))
            .add("1", BatchNorm2d::new(out, BN_EPS));
        block.with_shortcut("downsample", proj)
    } else {
        block
    }
}

/// Bottleneck residual network; each residual block is its own network block
/// (`layer1.0` ... `layer4.2`).
pub(super) fn build(w: Width, num_classes: usize, rng: &mut ChaCha8Rng) -> Network {
    let mut net = Network::new();
    let stem = w.of(64);
    net.push("conv1", conv(Conv2dConfig::new(3, stem, 7).stride(2).padding(3), rng));
    net.push("bn1", BatchNorm2d::new(stem, BN_EPS));
    net.push("relu", Relu::new());
    net.push("maxpool", MaxPool2d::new(3, 2, 1));
    let mut inplanes = stem;
    for (stage, (&blocks, base)) in LAYERS.iter().zip([64, 128, 256, 512]).enumerate() {
        let planes = w.of(base);
        for b in 0..blocks {
            let stride = if stage > 0 && b == 0 { 2 } else { 1 };
            net.push(
                format!("layer{}.{b}", stage + 1),
                bottleneck(inplanes, planes, stride, rng),
            );
            inplanes = planes * EXPANSION;
        }
    }
    net.push("avgpool", AdaptiveAvgPool2d::global());
    net.push("flatten", Flatten::new());
    net.push("fc", linear(inplanes, num_classes, rng));
    net
}
