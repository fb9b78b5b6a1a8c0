use ndarray::{s, Array4, Axis};

use crate::activation::Relu;
use crate::layer::{missing_record, BackwardCtx, ForwardCtx, Layer};
use crate::param::{join, Slot, SlotMut};

/// Layers applied in order. A child registered under an empty name shares
/// its parent's state-dict prefix.
#[derive(Default)]
pub struct Sequential {
    children: Vec<(String, Box<dyn Layer>)>,
}

impl Sequential {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(mut self, name: impl Into<String>, layer: impl Layer + 'static) -> Self {
        self.children.push((name.into(), Box::new(layer)));
        self
    }

    pub fn push_boxed(&mut self, name: impl Into<String>, layer: Box<dyn Layer>) {
        self.children.push((name.into(), layer));
    }

    pub fn len(&self) -> usize {
        self.children.len()
    }

    pub fn is_empty(&self) -> bool {
        self.children.is_empty()
    }
}

impl Layer for Sequential {
    fn forward(&mut self, x: &Array4<f32>, ctx: &mut ForwardCtx<'_>) -> Array4<f32> {
        let mut h = x.clone();
        for (_, layer) in &mut self.children {
            h = layer.forward(&h, ctx);
        }
        h
    }

    fn backward(&mut self, grad: &Array4<f32>, ctx: BackwardCtx) -> Option<Array4<f32>> {
        let mut g = grad.clone();
        for (i, (_, layer)) in self.children.iter_mut().enumerate().rev() {
            let inner = if i == 0 { ctx } else { ctx.with_input_grad() };
            g = layer.backward(&g, inner)?;
        }
        Some(g)
    }

    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, Slot<'_>)) {
        for (name, layer) in &self.children {
            layer.visit(&join(prefix, name), f);
        }
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, SlotMut<'_>)) {
        for (name, layer) in &mut self.children {
            layer.visit_mut(&join(prefix, name), f);
        }
    }

    fn clear(&mut self) {
        for (_, layer) in &mut self.children {
            layer.clear();
        }
    }
}

/// Parallel branches over the same input, concatenated along channels.
#[derive(Default)]
pub struct Concat {
    branches: Vec<Box<dyn Layer>>,
    widths: Option<Vec<usize>>,
}

impl Concat {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn branch(mut self, layer: impl Layer + 'static) -> Self {
        self.branches.push(Box::new(layer));
        self
    }
}

impl Layer for Concat {
    fn forward(&mut self, x: &Array4<f32>, ctx: &mut ForwardCtx<'_>) -> Array4<f32> {
        let outs: Vec<Array4<f32>> = self.branches.iter_mut().map(|b| b.forward(x, ctx)).collect();
        self.widths = ctx.record.then(|| outs.iter().map(|o| o.dim().1).collect());
        let views: Vec<_> = outs.iter().map(|o| o.view()).collect();
        ndarray::concatenate(Axis(1), &views).expect("branch outputs share N, H, W")
    }

    fn backward(&mut self, grad: &Array4<f32>, ctx: BackwardCtx) -> Option<Array4<f32>> {
        let widths = self.widths.take().unwrap_or_else(|| missing_record("Concat"));
        let mut total: Option<Array4<f32>> = None;
        let mut start = 0;
        for (branch, w) in self.branches.iter_mut().zip(widths) {
            let g = grad.slice(s![.., start..start + w, .., ..]).to_owned();
            start += w;
            if let Some(dx) = branch.backward(&g, ctx) {
                match total.as_mut() {
                    Some(t) => *t += &dx,
                    None => total = Some(dx),
                }
            }
        }
        total
    }

    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, Slot<'_>)) {
        for b in &self.branches {
            b.visit(prefix, f);
        }
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, SlotMut<'_>)) {
        for b in &mut self.branches {
            b.visit_mut(prefix, f);
        }
    }

    fn clear(&mut self) {
        self.widths = None;
        for b in &mut self.branches {
            b.clear();
        }
    }
}

/// `relu(main(x) + shortcut(x))`, with the identity when no shortcut
/// projection is given. The main path shares the block prefix; the
/// projection lives under the name given to `with_shortcut`.
pub struct Residual {
    main: Sequential,
    shortcut: Option<(String, Sequential)>,
    relu: Relu,
}

impl Residual {
    pub fn new(main: Sequential) -> Self {
        Self {
            main,
            shortcut: None,
            relu: Relu::new(),
        }
    }

    pub fn with_shortcut(mut self, name: impl Into<String>, projection: Sequential) -> Self {
        self.shortcut = Some((name.into(), projection));
        self
    }
}

impl Layer for Residual {
    fn forward(&mut self, x: &Array4<f32>, ctx: &mut ForwardCtx<'_>) -> Array4<f32> {
        let mut y = self.main.forward(x, ctx);
        match self.shortcut.as_mut() {
            Some((_, proj)) => y += &proj.forward(x, ctx),
            None => y += x,
        }
        self.relu.forward(&y, ctx)
    }

    fn backward(&mut self, grad: &Array4<f32>, ctx: BackwardCtx) -> Option<Array4<f32>> {
        let g = self
            .relu
            .backward(grad, ctx.with_input_grad())
            .expect("relu input gradient");
        let dmain = self.main.backward(&g, ctx);
        let dshort = match self.shortcut.as_mut() {
            Some((_, proj)) => proj.backward(&g, ctx),
            None => ctx.input_grad.then(|| g.clone()),
        };
        match (dmain, dshort) {
            (Some(mut a), Some(b)) => {
                a += &b;
                Some(a)
            }
            (a, b) => a.or(b),
        }
    }

    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, Slot<'_>)) {
        self.main.visit(prefix, f);
        if let Some((name, proj)) = &self.shortcut {
            proj.visit(&join(prefix, name), f);
        }
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, SlotMut<'_>)) {
        self.main.visit_mut(prefix, f);
        if let Some((name, proj)) = &mut self.shortcut {
            proj.visit_mut(&join(prefix, name), f);
        }
    }

    fn clear(&mut self) {
        self.main.clear();
        self.relu.clear();
        if let Some((_, proj)) = &mut self.shortcut {
            proj.clear();
        }
    }
}
