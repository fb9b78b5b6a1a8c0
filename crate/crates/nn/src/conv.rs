use ndarray::linalg::general_mat_mul;
use ndarray::{Array4, ArrayView2, ArrayViewMut2};

use crate::layer::{missing_record, BackwardCtx, ForwardCtx, Layer};
use crate::param::{join, Param, Slot, SlotMut};

/// Upper bound on the im2col buffer, in elements. Batches are processed in
/// sample chunks that fit under it.
const MAX_COLS: usize = 1 << 23;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conv2dConfig {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: (usize, usize),
    pub stride: (usize, usize),
    pub padding: (usize, usize),
    pub bias: bool,
}

impl Conv2dConfig {
    pub fn new(in_channels: usize, out_channels: usize, kernel: usize) -> Self {
        Self {
            in_channels,
            out_channels,
            kernel: (kernel, kernel),
            stride: (1, 1),
            padding: (0, 0),
            bias: false,
        }
    }

    pub fn kernel2(mut self, kh: usize, kw: usize) -> Self {
        self.kernel = (kh, kw);
        self
    }

    pub fn stride(mut self, s: usize) -> Self {
        self.stride = (s, s);
        self
    }

    pub fn padding(mut self, p: usize) -> Self {
        self.padding = (p, p);
        self
    }

    pub fn padding2(mut self, ph: usize, pw: usize) -> Self {
        self.padding = (ph, pw);
        self
    }

    pub fn with_bias(mut self, bias: bool) -> Self {
        self.bias = bias;
        self
    }

    pub fn output_hw(&self, h: usize, w: usize) -> (usize, usize) {
        let (kh, kw) = self.kernel;
        let (sh, sw) = self.stride;
        let (ph, pw) = self.padding;
        assert!(
            h + 2 * ph >= kh && w + 2 * pw >= kw,
            "conv input {h}x{w} smaller than kernel {kh}x{kw}"
        );
        ((h + 2 * ph - kh) / sh + 1, (w + 2 * pw - kw) / sw + 1)
    }

    fn patch_len(&self) -> usize {
        self.in_channels * self.kernel.0 * self.kernel.1
    }
}

#[derive(Debug, Clone, Copy)]
struct Geometry {
    c: usize,
    h: usize,
    w: usize,
    oh: usize,
    ow: usize,
    kh: usize,
    kw: usize,
    sh: usize,
    sw: usize,
    ph: usize,
    pw: usize,
}

impl Geometry {
    fn ohw(&self) -> usize {
        self.oh * self.ow
    }
}

/// 2-D cross-correlation over NCHW input, weight layout `[O, C, kh, kw]`.
pub struct Conv2d {
    cfg: Conv2dConfig,
    pub weight: Param,
    pub bias: Option<Param>,
    input: Option<Array4<f32>>,
}

impl Conv2d {
    pub fn new(cfg: Conv2dConfig) -> Self {
        let (kh, kw) = cfg.kernel;
        Self {
            cfg,
            weight: Param::zeros(&[cfg.out_channels, cfg.in_channels, kh, kw]),
            bias: cfg.bias.then(|| Param::zeros(&[cfg.out_channels])),
            input: None,
        }
    }

    pub fn config(&self) -> &Conv2dConfig {
        &self.cfg
    }

    fn geometry(&self, x: &Array4<f32>) -> Geometry {
        let (_, c, h, w) = x.dim();
        assert_eq!(
            c, self.cfg.in_channels,
            "conv expects {} input channels, got {c}",
            self.cfg.in_channels
        );
        let (oh, ow) = self.cfg.output_hw(h, w);
        Geometry {
            c,
            h,
            w,
            oh,
            ow,
            kh: self.cfg.kernel.0,
            kw: self.cfg.kernel.1,
            sh: self.cfg.stride.0,
            sw: self.cfg.stride.1,
            ph: self.cfg.padding.0,
            pw: self.cfg.padding.1,
        }
    }

    fn chunk_len(&self, g: &Geometry) -> usize {
        (MAX_COLS / (self.cfg.patch_len() * g.ohw()).max(1)).max(1)
    }

    fn weight_matrix(&self) -> ArrayView2<'_, f32> {
        let w = self.weight.value.as_slice().expect("contiguous conv weight");
        ArrayView2::from_shape((self.cfg.out_channels, self.cfg.patch_len()), w).unwrap()
    }
}

fn im2col(x: &[f32], g: &Geometry, n0: usize, nb: usize, cols: &mut [f32]) {
    let ohw = g.ohw();
    let ncols = nb * ohw;
    let plane = g.h * g.w;
    for c in 0..g.c {
        for ki in 0..g.kh {
            for kj in 0..g.kw {
                let row = (c * g.kh + ki) * g.kw + kj;
                let dst = &mut cols[row * ncols..(row + 1) * ncols];
                for b in 0..nb {
                    let src = &x[((n0 + b) * g.c + c) * plane..][..plane];
                    let out = &mut dst[b * ohw..(b + 1) * ohw];
                    for oy in 0..g.oh {
                        let iy = (oy * g.sh + ki) as isize - g.ph as isize;
                        let line = &mut out[oy * g.ow..(oy + 1) * g.ow];
                        if iy < 0 || iy >= g.h as isize {
                            line.fill(0.0);
                            continue;
                        }
                        let src_row = &src[iy as usize * g.w..][..g.w];
                        for (ox, v) in line.iter_mut().enumerate() {
                            let ix = (ox * g.sw + kj) as isize - g.pw as isize;
                            *v = if ix < 0 || ix >= g.w as isize {
                                0.0
                            } else {
                                src_row[ix as usize]
                            };
                        }
                    }
                }
            }
        }
    }
}

fn col2im(cols: &[f32], g: &Geometry, n0: usize, nb: usize, dx: &mut [f32]) {
    let ohw = g.ohw();
    let ncols = nb * ohw;
    let plane = g.h * g.w;
    for c in 0..g.c {
        for ki in 0..g.kh {
            for kj in 0..g.kw {
                let row = (c * g.kh + ki) * g.kw + kj;
                let src = &cols[row * ncols..(row + 1) * ncols];
                for b in 0..nb {
                    let dst = &mut dx[((n0 + b) * g.c + c) * plane..][..plane];
                    let inp = &src[b * ohw..(b + 1) * ohw];
                    for oy in 0..g.oh {
                        let iy = (oy * g.sh + ki) as isize - g.ph as isize;
                        if iy < 0 || iy >= g.h as isize {
                            continue;
                        }
                        let dst_row = &mut dst[iy as usize * g.w..][..g.w];
                        for (ox, v) in inp[oy * g.ow..(oy + 1) * g.ow].iter().enumerate() {
                            let ix = (ox * g.sw + kj) as isize - g.pw as isize;
                            if ix >= 0 && ix < g.w as isize {
                                dst_row[ix as usize] += *v;
                            }
                        }
                    }
                }
            }
        }
    }
}

impl Layer for Conv2d {
    fn forward(&mut self, x: &Array4<f32>, ctx: &mut ForwardCtx<'_>) -> Array4<f32> {
        let g = self.geometry(x);
        let n = x.dim().0;
        let o = self.cfg.out_channels;
        let ohw = g.ohw();
        let xs = x.as_standard_layout();
        let xs = xs.as_slice().unwrap();
        let mut y = Array4::<f32>::zeros((n, o, g.oh, g.ow));
        let ys = y.as_slice_mut().unwrap();
        let chunk = self.chunk_len(&g);
        let kdim = self.cfg.patch_len();
        let mut cols = vec![0.0f32; kdim * chunk.min(n) * ohw];
        let mut out = vec![0.0f32; o * chunk.min(n) * ohw];
        let wm = self.weight_matrix();
        let mut n0 = 0;
        while n0 < n {
            let nb = chunk.min(n - n0);
            let ncols = nb * ohw;
            im2col(xs, &g, n0, nb, &mut cols[..kdim * ncols]);
            let cv = ArrayView2::from_shape((kdim, ncols), &cols[..kdim * ncols]).unwrap();
            let mut ov = ArrayViewMut2::from_shape((o, ncols), &mut out[..o * ncols]).unwrap();
            general_mat_mul(1.0, &wm, &cv, 0.0, &mut ov);
            for b in 0..nb {
                for oc in 0..o {
                    let bias = self
                        .bias
                        .as_ref()
                        .map_or(0.0, |p| p.value.as_slice().unwrap()[oc]);
                    let src = &out[oc * ncols + b * ohw..][..ohw];
                    let dst = &mut ys[((n0 + b) * o + oc) * ohw..][..ohw];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d = s + bias;
                    }
                }
            }
            n0 += nb;
        }
        self.input = ctx.record.then(|| x.clone());
        y
    }

    fn backward(&mut self, grad: &Array4<f32>, ctx: BackwardCtx) -> Option<Array4<f32>> {
        let x = self
            .input
            .take()
            .unwrap_or_else(|| missing_record("Conv2d"));
        let g = self.geometry(&x);
        let n = x.dim().0;
        let o = self.cfg.out_channels;
        let ohw = g.ohw();
        let kdim = self.cfg.patch_len();
        let want_w = ctx.param_grads && self.weight.is_trainable();
        let want_b = ctx.param_grads && self.bias.as_ref().is_some_and(Param::is_trainable);
        if !want_w && !want_b && !ctx.input_grad {
            return None;
        }
        let xs = x.as_standard_layout();
        let xs = xs.as_slice().unwrap();
        let gs = grad.as_standard_layout();
        let gs = gs.as_slice().unwrap();
        let mut dx = ctx.input_grad.then(|| Array4::<f32>::zeros(x.raw_dim()));
        let chunk = self.chunk_len(&g);
        let mut cols = vec![0.0f32; kdim * chunk.min(n) * ohw];
        let mut dy = vec![0.0f32; o * chunk.min(n) * ohw];
        let mut n0 = 0;
        while n0 < n {
            let nb = chunk.min(n - n0);
            let ncols = nb * ohw;
            for b in 0..nb {
                for oc in 0..o {
                    dy[oc * ncols + b * ohw..][..ohw]
                        .copy_from_slice(&gs[((n0 + b) * o + oc) * ohw..][..ohw]);
                }
            }
            let dyv = ArrayView2::from_shape((o, ncols), &dy[..o * ncols]).unwrap();
            if want_b {
                let db = self.bias.as_mut().unwrap().grad_mut().unwrap();
                let db = db.as_slice_mut().unwrap();
                for (oc, d) in db.iter_mut().enumerate() {
                    *d += dy[oc * ncols..(oc + 1) * ncols].iter().sum::<f32>();
                }
            }
            if want_w {
                im2col(xs, &g, n0, nb, &mut cols[..kdim * ncols]);
                let cv = ArrayView2::from_shape((kdim, ncols), &cols[..kdim * ncols]).unwrap();
                let dw = self.weight.grad_mut().unwrap().as_slice_mut().unwrap();
                let mut dwv = ArrayViewMut2::from_shape((o, kdim), dw).unwrap();
                general_mat_mul(1.0, &dyv, &cv.t(), 1.0, &mut dwv);
            }
            if let Some(dx) = dx.as_mut() {
                let wm = self.weight_matrix();
                let mut dcv =
                    ArrayViewMut2::from_shape((kdim, ncols), &mut cols[..kdim * ncols]).unwrap();
                general_mat_mul(1.0, &wm.t(), &dyv, 0.0, &mut dcv);
                col2im(&cols[..kdim * ncols], &g, n0, nb, dx.as_slice_mut().unwrap());
            }
            n0 += nb;
        }
        dx
    }

    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, Slot<'_>)) {
        f(&join(prefix, "weight"), Slot::Param(&self.weight));
        if let Some(b) = &self.bias {
            f(&join(prefix, "bias"), Slot::Param(b));
        }
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, SlotMut<'_>)) {
        f(&join(prefix, "weight"), SlotMut::Param(&mut self.weight));
        if let Some(b) = &mut self.bias {
            f(&join(prefix, "bias"), SlotMut::Param(b));
        }
    }

    fn clear(&mut self) {
        self.input = None;
    }
}
