use ndarray::Array4;

use crate::layer::{missing_record, BackwardCtx, ForwardCtx, Layer};

fn pooled_len(len: usize, k: usize, s: usize, p: usize) -> usize {
    assert!(len + 2 * p >= k, "pool input {len} smaller than window {k}");
    (len + 2 * p - k) / s + 1
}

/// Max pooling; the backward pass routes each gradient to the first
/// maximal input of its window.
pub struct MaxPool2d {
    kernel: usize,
    stride: usize,
    padding: usize,
    record: Option<(Vec<usize>, (usize, usize, usize, usize))>,
}

impl MaxPool2d {
    pub fn new(kernel: usize, stride: usize, padding: usize) -> Self {
        Self {
            kernel,
            stride,
            padding,
            record: None,
        }
    }
}

impl Layer for MaxPool2d {
    fn forward(&mut self, x: &Array4<f32>, ctx: &mut ForwardCtx<'_>) -> Array4<f32> {
        let (n, c, h, w) = x.dim();
        let oh = pooled_len(h, self.kernel, self.stride, self.padding);
        let ow = pooled_len(w, self.kernel, self.stride, self.padding);
        let xs = x.as_standard_layout();
        let xs = xs.as_slice().unwrap();
        let mut y = Array4::<f32>::zeros((n, c, oh, ow));
        let mut argmax = Vec::with_capacity(if ctx.record { y.len() } else { 0 });
        let ys = y.as_slice_mut().unwrap();
        let mut k = 0;
        for plane in 0..n * c {
            let base = plane * h * w;
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut best = f32::NEG_INFINITY;
                    let mut at = usize::MAX;
                    for ki in 0..self.kernel {
                        let iy = (oy * self.stride + ki) as isize - self.padding as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        for kj in 0..self.kernel {
                            let ix = (ox * self.stride + kj) as isize - self.padding as isize;
                            if ix < 0 || ix >= w as isize {
                                continue;
                            }
                            let idx = base + iy as usize * w + ix as usize;
                            if xs[idx] > best || at == usize::MAX {
                                best = xs[idx];
                                at = idx;
                            }
                        }
                    }
                    ys[k] = best;
                    if ctx.record {
                        argmax.push(at);
                    }
                    k += 1;
                }
            }
        }
        self.record = ctx.record.then_some((argmax, (n, c, h, w)));
        y
    }

    fn backward(&mut self, grad: &Array4<f32>, ctx: BackwardCtx) -> Option<Array4<f32>> {
        let (argmax, dim) = self
            .record
            .take()
            .unwrap_or_else(|| missing_record("MaxPool2d"));
        if !ctx.input_grad {
            return None;
        }
        let mut dx = Array4::<f32>::zeros(dim);
        let ds = dx.as_slice_mut().unwrap();
        for (g, &at) in grad.iter().zip(&argmax) {
            ds[at] += *g;
        }
        Some(dx)
    }

    fn clear(&mut self) {
        self.record = None;
    }
}

/// Average pooling with zero padding counted in the divisor.
pub struct AvgPool2d {
    kernel: usize,
    stride: usize,
    padding: usize,
    input_dim: Option<(usize, usize, usize, usize)>,
}

impl AvgPool2d {
    pub fn new(kernel: usize, stride: usize, padding: usize) -> Self {
        Self {
            kernel,
            stride,
            padding,
            input_dim: None,
        }
    }

    fn windows(&self, h: usize, w: usize) -> (usize, usize) {
        (
            pooled_len(h, self.kernel, self.stride, self.padding),
            pooled_len(w, self.kernel, self.stride, self.padding),
        )
    }

    /// Valid input index ranges of output cell (oy, ox).
    fn span(&self, o: usize, len: usize) -> (usize, usize) {
        let start = (o * self.stride) as isize - self.padding as isize;
        let end = start + self.kernel as isize;
        (start.max(0) as usize, end.min(len as isize) as usize)
    }
}

impl Layer for AvgPool2d {
    fn forward(&mut self, x: &Array4<f32>, ctx: &mut ForwardCtx<'_>) -> Array4<f32> {
        let (n, c, h, w) = x.dim();
        let (oh, ow) = self.windows(h, w);
        let div = (self.kernel * self.kernel) as f32;
        let mut y = Array4::<f32>::zeros((n, c, oh, ow));
        for b in 0..n {
            for ch in 0..c {
                for oy in 0..oh {
                    let (y0, y1) = self.span(oy, h);
                    for ox in 0..ow {
                        let (x0, x1) = self.span(ox, w);
                        let mut s = 0.0;
                        for iy in y0..y1 {
                            for ix in x0..x1 {
                                s += x[[b, ch, iy, ix]];
                            }
                        }
                        y[[b, ch, oy, ox]] = s / div;
                    }
                }
            }
        }
        self.input_dim = ctx.record.then_some((n, c, h, w));
        y
    }

    fn backward(&mut self, grad: &Array4<f32>, ctx: BackwardCtx) -> Option<Array4<f32>> {
        let dim = self
            .input_dim
            .take()
            .unwrap_or_else(|| missing_record("AvgPool2d"));
        if !ctx.input_grad {
            return None;
        }
        let (n, c, h, w) = dim;
        let (oh, ow) = self.windows(h, w);
        let div = (self.kernel * self.kernel) as f32;
        let mut dx = Array4::<f32>::zeros(dim);
        for b in 0..n {
            for ch in 0..c {
                for oy in 0..oh {
                    let (y0, y1) = self.span(oy, h);
                    for ox in 0..ow {
                        let (x0, x1) = self.span(ox, w);
                        let g = grad[[b, ch, oy, ox]] / div;
                        for iy in y0..y1 {
                            for ix in x0..x1 {
                                dx[[b, ch, iy, ix]] += g;
                            }
                        }
                    }
                }
            }
        }
        Some(dx)
    }

    fn clear(&mut self) {
        self.input_dim = None;
    }
}

/// Adaptive average pooling to a fixed output grid; bin `i` of `out` over
/// `len` inputs covers `[floor(i*len/out), ceil((i+1)*len/out))`.
pub struct AdaptiveAvgPool2d {
    out: (usize, usize),
    input_dim: Option<(usize, usize, usize, usize)>,
}

fn bin(i: usize, len: usize, out: usize) -> (usize, usize) {
    (i * len / out, ((i + 1) * len).div_ceil(out))
}

impl AdaptiveAvgPool2d {
    pub fn new(oh: usize, ow: usize) -> Self {
        Self {
            out: (oh, ow),
            input_dim: None,
        }
    }

    pub fn global() -> Self {
        Self::new(1, 1)
    }
}

impl Layer for AdaptiveAvgPool2d {
    fn forward(&mut self, x: &Array4<f32>, ctx: &mut ForwardCtx<'_>) -> Array4<f32> {
        let (n, c, h, w) = x.dim();
        let (oh, ow) = self.out;
        let mut y = Array4::<f32>::zeros((n, c, oh, ow));
        for b in 0..n {
            for ch in 0..c {
                for oy in 0..oh {
                    let (y0, y1) = bin(oy, h, oh);
                    for ox in 0..ow {
                        let (x0, x1) = bin(ox, w, ow);
                        let mut s = 0.0;
                        for iy in y0..y1 {
                            for ix in x0..x1 {
                                s += x[[b, ch, iy, ix]];
                            }
                        }
                        y[[b, ch, oy, ox]] = s / ((y1 - y0) * (x1 - x0)) as f32;
                    }
                }
            }
        }
        self.input_dim = ctx.record.then_some((n, c, h, w));
        y
    }

    fn backward(&mut self, grad: &Array4<f32>, ctx: BackwardCtx) -> Option<Array4<f32>> {
        let dim = self
            .input_dim
            .take()
            .unwrap_or_else(|| missing_record("AdaptiveAvgPool2d"));
        if !ctx.input_grad {
            return None;
        }
        let (n, c, h, w) = dim;
        let (oh, ow) = self.out;
        let mut dx = Array4::<f32>::zeros(dim);
        for b in 0..n {
            for ch in 0..c {
                for oy in 0..oh {
                    let (y0, y1) = bin(oy, h, oh);
                    for ox in 0..ow {
                        let (x0, x1) = bin(ox, w, ow);
                        let g = grad[[b, ch, oy, ox]] / ((y1 - y0) * (x1 - x0)) as f32;
                        for iy in y0..y1 {
                            for ix in x0..x1 {
                                dx[[b, ch, iy, ix]] += g;
                            }
                        }
                    }
                }
            }
        }
        Some(dx)
    }

    fn clear(&mut self) {
        self.input_dim = None;
    }
}
