//! Inference over a split and the resulting report.

use ndarray::{concatenate, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::dataset::LabelVocabulary;
use crate::error::{Error, Result};
use crate::loader::ImageSet;
use crate::losses::FocalLossConfig;
use crate::metrics::EvalReport;
use crate::models::ClassifierModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub batch_eval: usize,
    pub threshold: f64,
    pub focal: FocalLossConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            batch_eval: 32,
            threshold: 0.5,
            focal: FocalLossConfig::default(),
        }
    }
}

/// Logits for every sample in order, without augmentation.
pub fn predict(model: &mut ClassifierModel, data: &mut ImageSet, batch: usize) -> Result<Array2<f64>> {
    if batch == 0 {
        return Err(Error::InvalidArgument("batch size must be >= 1".into()));
    }
    let idx: Vec<usize> = (0..data.len()).collect();
    let mut parts = Vec::new();
    for chunk in idx.chunks(batch) {
        let (x, _) = data.batch(chunk, None)?;
        let logits = model.logits(&x).mapv(f64::from);
        if let Some(row) = logits.rows().into_iter().position(|r| r.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite(format!(
                "non-finite logits for image {}",
                data.ids()[chunk[row]]
            )));
        }
        parts.push(logits);
    }
    let views: Vec<_> = parts.iter().map(|p| p.view()).collect();
    Ok(concatenate(Axis(0), &views).unwrap_or_else(|_| Array2::zeros((0, model.num_classes()))))
}

pub fn evaluate(
    model: &mut ClassifierModel,
    data: &mut ImageSet,
    vocabulary: &LabelVocabulary,
    model_name: &str,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("evaluation split is empty".into()));
    }
    if model.num_classes() != vocabulary.len() {
        return Err(Error::InvalidArgument(format!(
            "model has {} outputs for a {}-class vocabulary",
            model.num_classes(),
            vocabulary.len()
        )));
    }
    let logits = predict(model, data, cfg.batch_eval)?;
    EvalReport::from_logits(
        model_name,
        logits.view(),
        data.targets().view(),
        vocabulary,
        cfg.threshold,
        &cfg.focal,
    )
}
