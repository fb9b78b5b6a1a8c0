use cxrlens_nn::init::normal;
use cxrlens_nn::{
    AdaptiveAvgPool2d, AvgPool2d, BatchNorm2d, Concat, Conv2d, Conv2dConfig, Dropout, Flatten,
    Linear, MaxPool2d, Network, Relu, Sequential,
};
use rand_chacha::ChaCha8Rng;

use super::Width;

const BN_EPS: f32 = 1e-3;
const INIT_STD: f32 = 0.1;

struct Builder<'a> {
    w: Width,
    rng: &'a mut ChaCha8Rng,
}

impl Builder<'_> {
    /// Convolution, batch norm and ReLU under `<name>.conv` / `<name>.bn`.
    fn basic(&mut self, cfg: Conv2dConfig) -> Sequential {
        let mut conv = Conv2d::new(cfg);
        normal(&mut conv.weight.value, INIT_STD, self.rng);
        Sequential::new()
            .add("conv", conv)
            .add("bn", BatchNorm2d::new(cfg.out_channels, BN_EPS))
            .add("", Relu::new())
    }

    fn conv(&mut self, inp: usize, out: usize, k: usize) -> Sequential {
        let out = self.w.of(out);
        self.basic(Conv2dConfig::new(inp, out, k))
    }

    fn conv_pad(&mut self, inp: usize, out: usize, k: usize, pad: usize) -> Sequential {
        let out = self.w.of(out);
        self.basic(Conv2dConfig::new(inp, out, k).padding(pad))
    }

    fn conv_s2(&mut self, inp: usize, out: usize) -> Sequential {
        let out = self.w.of(out);
        self.basic(Conv2dConfig::new(inp, out, 3).stride(2))
    }

    /// 1x7 (`wide`) or 7x1 convolution, or 1x3 / 3x1 for `k = 3`.
    fn conv_line(&mut self, inp: usize, out: usize, k: usize, wide: bool) -> Sequential {
        let out = self.w.of(out);
        let cfg = if wide {
            Conv2dConfig::new(inp, out, k).kernel2(1, k).padding2(0, k / 2)
        } else {
            Conv2dConfig::new(inp, out, k).kernel2(k, 1).padding2(k / 2, 0)
        };
        self.basic(cfg)
    }

    fn inception_a(&mut self, inp: usize, pool_features: usize) -> (Concat, usize) {
        let w = self.w;
        let layer = Concat::new()
            .branch(Sequential::new().add("branch1x1", self.conv(inp, 64, 1)))
            .branch(
                Sequential::new()
                    .add("branch5x5_1", self.conv(inp, 48, 1))
                    .add("branch5x5_2", self.conv_pad(w.of(48), 64, 5, 2)),
            )
            .branch(
                Sequential::new()
                    .add("branch3x3dbl_1", self.conv(inp, 64, 1))
                    .add("branch3x3dbl_2", self.conv_pad(w.of(64), 96, 3, 1))
                    .add("branch3x3dbl_3", self.conv_pad(w.of(96), 96, 3, 1)),
            )
            .branch(
                Sequential::new()
                    .add("", AvgPool2d::new(3, 1, 1))
                    .add("branch_pool", self.conv(inp, pool_features, 1)),
            );
        (layer, w.of(64) + w.of(64) + w.of(96) + w.of(pool_features))
    }

    fn inception_b(&mut self, inp: usize) -> (Concat, usize) {
        let w = self.w;
        let layer = Concat::new()
            .branch(Sequential::new().add("branch3x3", self.conv_s2(inp, 384)))
            .branch(
                Sequential::new()
                    .add("branch3x3dbl_1", self.conv(inp, 64, 1))
                    .add("branch3x3dbl_2", self.conv_pad(w.of(64), 96, 3, 1))
                    .add("branch3x3dbl_3", self.conv_s2(w.of(96), 96)),
            )
            .branch(Sequential::new().add("", MaxPool2d::new(3, 2, 0)));
        (layer, w.of(384) + w.of(96) + inp)
    }

    fn inception_c(&mut self, inp: usize, c7: usize) -> (Concat, usize) {
        let w = self.w;
        let c = w.of(c7);
        let layer = Concat::new()
            .branch(Sequential::new().add("branch1x1", self.conv(inp, 192, 1)))
            .branch(
                Sequential::new()
                    .add("branch7x7_1", self.conv(inp, c7, 1))
                    .add("branch7x7_2", self.conv_line(c, c7, 7, true))
                    .add("branch7x7_3", self.conv_line(c, 192, 7, false)),
            )
            .branch(
                Sequential::new()
                    .add("branch7x7dbl_1", self.conv(inp, c7, 1))
                    .add("branch7x7dbl_2", self.conv_line(c, c7, 7, false))
                    .add("branch7x7dbl_3", self.conv_line(c, c7, 7, true))
                    .add("branch7x7dbl_4", self.conv_line(c, c7, 7, false))
                    .add("branch7x7dbl_5", self.conv_line(c, 192, 7, true)),
            )
            .branch(
                Sequential::new()
                    .add("", AvgPool2d::new(3, 1, 1))
                    .add("branch_pool", self.conv(inp, 192, 1)),
            );
        (layer, 4 * w.of(192))
    }

    fn inception_d(&mut self, inp: usize) -> (Concat, usize) {
        let w = self.w;
        let layer = Concat::new()
            .branch(
                Sequential::new()
                    .add("branch3x3_1", self.conv(inp, 192, 1))
                    .add("branch3x3_2", self.conv_s2(w.of(192), 320)),
            )
            .branch(
                Sequential::new()
                    .add("branch7x7x3_1", self.conv(inp, 192, 1))
                    .add("branch7x7x3_2", self.conv_line(w.of(192), 192, 7, true))
                    .add("branch7x7x3_3", self.conv_line(w.of(192), 192, 7, false))
                    .add("branch7x7x3_4", self.conv_s2(w.of(192), 192)),
            )
            .branch(Sequential::new().add("", MaxPool2d::new(3, 2, 0)));
        (layer, w.of(320) + w.of(192) + inp)
    }

    fn inception_e(&mut self, inp: usize) -> (Concat, usize) {
        let w = self.w;
        let c384 = w.of(384);
        let split = |b: &mut Self, a: &str, bname: &str| {
            Concat::new()
                .branch(Sequential::new().add(a, b.conv_line(c384, 384, 3, true)))
                .branch(Sequential::new().add(bname, b.conv_line(c384, 384, 3, false)))
        };
        let b3 = Sequential::new()
            .add("branch3x3_1", self.conv(inp, 384, 1))
            .add("", split(self, "branch3x3_2a", "branch3x3_2b"));
        let bdbl = Sequential::new()
            .add("branch3x3dbl_1", self.conv(inp, 448, 1))
            .add("branch3x3dbl_2", self.conv_pad(w.of(448), 384, 3, 1))
            .add("", split(self, "branch3x3dbl_3a", "branch3x3dbl_3b"));
        let layer = Concat::new()
            .branch(Sequential::new().add("branch1x1", self.conv(inp, 320, 1)))
            .branch(b3)
            .branch(bdbl)
            .branch(
                Sequential::new()
                    .add("", AvgPool2d::new(3, 1, 1))
                    .add("branch_pool", self.conv(inp, 192, 1)),
            );
        (layer, w.of(320) + 4 * c384 + w.of(192))
    }
}

/// Inception v3 without the auxiliary classifier and without input
/// re-normalization.
pub(super) fn build(w: Width, num_classes: usize, rng: &mut ChaCha8Rng) -> Network {
    let mut net = Network::new();
    let mut b = Builder { w, rng };
    net.push("Conv2d_1a_3x3", b.conv_s2(3, 32));
    net.push("Conv2d_2a_3x3", b.conv(w.of(32), 32, 3));
    net.push("Conv2d_2b_3x3", b.conv_pad(w.of(32), 64, 3, 1));
    net.push("maxpool1", MaxPool2d::new(3, 2, 0));
    net.push("Conv2d_3b_1x1", b.conv(w.of(64), 80, 1));
    net.push("Conv2d_4a_3x3", b.conv(w.of(80), 192, 3));
    net.push("maxpool2", MaxPool2d::new(3, 2, 0));
    let (m, c) = b.inception_a(w.of(192), 32);
    net.push("Mixed_5b", m);
    let (m, c) = b.inception_a(c, 64);
    net.push("Mixed_5c", m);
    let (m, c) = b.inception_a(c, 64);
    net.push("Mixed_5d", m);
    let (m, c) = b.inception_b(c);
    net.push("Mixed_6a", m);
    let (m, c) = b.inception_c(c, 128);
    net.push("Mixed_6b", m);
    let (m, c) = b.inception_c(c, 160);
    net.push("Mixed_6c", m);
    let (m, c) = b.inception_c(c, 160);
    net.push("Mixed_6d", m);
    let (m, c) = b.inception_c(c, 192);
    net.push("Mixed_6e", m);
    let (m, c) = b.inception_d(c);
    net.push("Mixed_7a", m);
    let (m, c) = b.inception_e(c);
    net.push("Mixed_7b", m);
    let (m, c) = b.inception_e(c);
    net.push("Mixed_7c", m);
    net.push("avgpool", AdaptiveAvgPool2d::global());
    net.push("dropout", Dropout::new(0.5));
    net.push("flatten", Flatten::new());
    let mut fc = Linear::new(c, num_classes);
    normal(&mut fc.weight.value, INIT_STD, b.rng);
    net.push("fc", fc);
    net
}
