//! Multi-label objectives on raw logits, with analytic gradients.

use ndarray::{Array2, ArrayView2, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Clamp applied to `p_t` inside the focal modulator.
pub const PROB_EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reduction {
    #[default]
    Mean,
    Sum,
    None,
}

/// How `alpha` weights the focal term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphaMode {
    /// One multiplier on every element.
    #[default]
    Scalar,
    /// `alpha` on positives, `1 - alpha` on negatives.
    Balanced,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FocalLossConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub alpha_mode: AlphaMode,
    pub reduction: Reduction,
}

impl Default for FocalLossConfig {
    fn default() -> Self {
        Self {
            alpha: 0.25,
            gamma: 2.0,
            alpha_mode: AlphaMode::Scalar,
            reduction: Reduction::Mean,
        }
    }
}

impl FocalLossConfig {
    pub fn new(alpha: f64, gamma: f64) -> Self {
        Self {
            alpha,
            gamma,
            ..Self::default()
        }
    }

    pub fn with_reduction(mut self, reduction: Reduction) -> Self {
        self.reduction = reduction;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "focal gamma must be finite and >= 0, got {}",
                self.gamma
            )));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "focal alpha must be in (0, 1], got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    fn alpha_t(&self, y: f64) -> f64 {
        match self.alpha_mode {
            AlphaMode::Scalar => self.alpha,
            AlphaMode::Balanced => y * self.alpha + (1.0 - y) * (1.0 - self.alpha),
        }
    }
}

/// A reduced loss or its elementwise matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum LossValue {
    Scalar(f64),
    Elementwise(Array2<f64>),
}

impl LossValue {
    /// The scalar value; panics on an elementwise result.
    pub fn scalar(&self) -> f64 {
        match self {
            LossValue::Scalar(v) => *v,
            LossValue::Elementwise(_) => panic!("loss was not reduced"),
        }
    }

    pub fn elementwise(self) -> Array2<f64> {
        match self {
            LossValue::Elementwise(m) => m,
            LossValue::Scalar(_) => panic!("loss was reduced"),
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Elementwise binary cross-entropy on a logit.
pub fn bce_elem(z: f64, y: f64) -> f64 {
    y * softplus(-z) + (1.0 - y) * softplus(z)
}

pub fn bce_elem_grad(z: f64, y: f64) -> f64 {
    sigmoid(z) - y
}

/// `alpha_t * (1 - p_t)^gamma * ce`, with `p_t` clamped in the modulator.
pub fn focal_elem(z: f64, y: f64, cfg: &FocalLossConfig) -> f64 {
    let p = sigmoid(z);
    let pt = (y * p + (1.0 - y) * (1.0 - p)).clamp(PROB_EPS, 1.0 - PROB_EPS);
    cfg.alpha_t(y) * (1.0 - pt).powf(cfg.gamma) * bce_elem(z, y)
}

pub fn focal_elem_grad(z: f64, y: f64, cfg: &FocalLossConfig) -> f64 {
    let p = sigmoid(z);
    let raw = y * p + (1.0 - y) * (1.0 - p);
    let pt = raw.clamp(PROB_EPS, 1.0 - PROB_EPS);
    let q = 1.0 - pt;
    // the clamp is flat outside its range
    let dq = if raw == pt {
        -(2.0 * y - 1.0) * p * (1.0 - p)
    } else {
        0.0
    };
    let dmod = if cfg.gamma == 0.0 {
        0.0
    } else {
        cfg.gamma * q.powf(cfg.gamma - 1.0) * dq
    };
    cfg.alpha_t(y) * (dmod * bce_elem(z, y) + q.powf(cfg.gamma) * (p - y))
}

fn check_inputs(logits: &ArrayView2<'_, f64>, targets: &ArrayView2<'_, f64>) -> Result<()> {
    if logits.dim() != targets.dim() {
        return Err(Error::InvalidArgument(format!(
            "logits {:?} and targets {:?} differ in shape",
            logits.dim(),
            targets.dim()
        )));
    }
    if logits.is_empty() {
        return Err(Error::InvalidArgument("empty loss input".into()));
    }
    if let Some(((r, c), v)) = logits.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite(format!("logit [{r}, {c}] = {v}")));
    }
    if targets.iter().any(|t| *t != 0.0 && *t != 1.0) {
        return Err(Error::InvalidArgument("targets must be 0 or 1".into()));
    }
    Ok(())
}

fn reduce(m: Array2<f64>, reduction: Reduction) -> LossValue {
    match reduction {
        Reduction::Mean => LossValue::Scalar(m.sum() / m.len() as f64),
        Reduction::Sum => LossValue::Scalar(m.sum()),
        Reduction::None => LossValue::Elementwise(m),
    }
}

/// Gradient of the reduced loss. For `None` this is the elementwise
/// derivative (the gradient of the sum).
fn reduce_grad(mut g: Array2<f64>, reduction: Reduction) -> Array2<f64> {
    if reduction == Reduction::Mean {
        let n = g.len() as f64;
        g.mapv_inplace(|v| v / n);
    }
    g
}

fn map2(
    logits: &ArrayView2<'_, f64>,
    targets: &ArrayView2<'_, f64>,
    f: impl Fn(f64, f64) -> f64,
) -> Array2<f64> {
    Zip::from(logits).and(targets).map_collect(|z, y| f(*z, *y))
}

pub fn bce_with_logits(
    logits: ArrayView2<'_, f64>,
    targets: ArrayView2<'_, f64>,
    reduction: Reduction,
) -> Result<LossValue> {
    check_inputs(&logits, &targets)?;
    Ok(reduce(map2(&logits, &targets, bce_elem), reduction))
}

pub fn bce_with_logits_grad(
    logits: ArrayView2<'_, f64>,
    targets: ArrayView2<'_, f64>,
    reduction: Reduction,
) -> Result<Array2<f64>> {
    check_inputs(&logits, &targets)?;
    Ok(reduce_grad(map2(&logits, &targets, bce_elem_grad), reduction))
}

pub fn focal_loss(
    logits: ArrayView2<'_, f64>,
    targets: ArrayView2<'_, f64>,
    cfg: &FocalLossConfig,
) -> Result<LossValue> {
    cfg.validate()?;
    check_inputs(&logits, &targets)?;
    let m = map2(&logits, &targets, |z, y| focal_elem(z, y, cfg));
    Ok(reduce(m, cfg.reduction))
}

pub fn focal_loss_grad(
    logits: ArrayView2<'_, f64>,
    targets: ArrayView2<'_, f64>,
    cfg: &FocalLossConfig,
) -> Result<Array2<f64>> {
    cfg.validate()?;
    check_inputs(&logits, &targets)?;
    let g = map2(&logits, &targets, |z, y| focal_elem_grad(z, y, cfg));
    Ok(reduce_grad(g, cfg.reduction))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    #[default]
    Bce,
    Focal,
}

/// The training objective, as written in run configuration
/// (`loss = { kind, alpha, gamma }`). Training always uses mean reduction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossConfig {
    pub kind: LossKind,
    pub alpha: f64,
    pub gamma: f64,
    pub alpha_mode: AlphaMode,
}

impl Default for LossConfig {
    fn default() -> Self {
        let f = FocalLossConfig::default();
        Self {
            kind: LossKind::Bce,
            alpha: f.alpha,
            gamma: f.gamma,
            alpha_mode: f.alpha_mode,
        }
    }
}

impl LossConfig {
    pub fn focal(&self) -> FocalLossConfig {
        FocalLossConfig {
            alpha: self.alpha,
            gamma: self.gamma,
            alpha_mode: self.alpha_mode,
            reduction: Reduction::Mean,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.focal().validate()
    }

    /// Mean loss and its gradient with respect to the logits.
    pub fn value_and_grad(
        &self,
        logits: ArrayView2<'_, f64>,
        targets: ArrayView2<'_, f64>,
    ) -> Result<(f64, Array2<f64>)> {
        match self.kind {
            LossKind::Bce => Ok((
                bce_with_logits(logits, targets, Reduction::Mean)?.scalar(),
                bce_with_logits_grad(logits, targets, Reduction::Mean)?,
            )),
            LossKind::Focal => {
                let cfg = self.focal();
                Ok((
                    focal_loss(logits, targets, &cfg)?.scalar(),
                    focal_loss_grad(logits, targets, &cfg)?,
                ))
            }
        }
    }
}
