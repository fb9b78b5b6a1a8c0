//! Per-class and macro-averaged evaluation metrics.

use std::cmp::Ordering;
use std::fmt::Write as _;

use ndarray::{ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::dataset::LabelVocabulary;
use crate::error::{Error, Result};
use crate::losses::{bce_elem, focal_elem, sigmoid, FocalLossConfig};

fn check_shapes(a: &ArrayView2<'_, f64>, b: &ArrayView2<'_, f64>) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::InvalidArgument(format!(
            "scores {:?} and targets {:?} differ in shape",
            a.dim(),
            b.dim()
        )));
    }
    if let Some(v) = a.iter().find(|v| v.is_nan()) {
        return Err(Error::NonFinite(format!("score {v}")));
    }
    Ok(())
}

/// Confusion counts and F1 for one class at a threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn count(probs: ArrayView1<'_, f64>, targets: ArrayView1<'_, f64>, threshold: f64) -> Self {
        let mut c = Confusion { tp: 0, fp: 0, fn_: 0 };
        for (p, t) in probs.iter().zip(targets) {
            match (*p >= threshold, *t == 1.0) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => {}
            }
        }
        c
    }

    /// `2TP / (2TP + FP + FN)`, or `None` when the denominator is zero.
    pub fn f1(&self) -> Option<f64> {
        let denom = 2 * self.tp + self.fp + self.fn_;
        (denom > 0).then(|| (2 * self.tp) as f64 / denom as f64)
    }
}

/// Macro F1 over classes; a zero denominator scores 0. Returns the macro
/// value and the per-class confusion counts.
pub fn f1_macro(
    probs: ArrayView2<'_, f64>,
    targets: ArrayView2<'_, f64>,
    threshold: f64,
) -> Result<(f64, Vec<Confusion>)> {
    check_shapes(&probs, &targets)?;
    let per: Vec<Confusion> = probs
        .axis_iter(Axis(1))
        .zip(targets.axis_iter(Axis(1)))
        .map(|(p, t)| Confusion::count(p, t, threshold))
        .collect();
    if per.is_empty() {
        return Err(Error::InvalidArgument("no classes".into()));
    }
    let sum: f64 = per.iter().map(|c| c.f1().unwrap_or(0.0)).sum();
    Ok((sum / per.len() as f64, per))
}

/// Mann-Whitney AUC from midranks: `(concordant + ties / 2) / (P * N)`.
/// `None` when the class has no positives or no negatives.
pub fn auc_binary(scores: ArrayView1<'_, f64>, targets: ArrayView1<'_, f64>) -> Option<f64> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let pos = targets.iter().filter(|t| **t == 1.0).count();
    let neg = targets.len() - pos;
    if pos == 0 || neg == 0 {
        return None;
    }
    let mut rank_sum = 0.0f64;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]].total_cmp(&scores[idx[i]]) == Ordering::Equal {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their mean
        let mid = (i + j + 2) as f64 / 2.0;
        for &k in &idx[i..=j] {
            if targets[k] == 1.0 {
                rank_sum += mid;
            }
        }
        i = j + 1;
    }
    let u = rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    Some(u / (pos * neg) as f64)
}

/// Macro AUC over non-degenerate classes. Errors when every class lacks
/// positives or negatives.
pub fn auc_macro(
    scores: ArrayView2<'_, f64>,
    targets: ArrayView2<'_, f64>,
) -> Result<(f64, Vec<Option<f64>>)> {
    check_shapes(&scores, &targets)?;
    let per: Vec<Option<f64>> = scores
        .axis_iter(Axis(1))
        .zip(targets.axis_iter(Axis(1)))
        .map(|(s, t)| auc_binary(s, t))
        .collect();
    let defined: Vec<f64> = per.iter().flatten().copied().collect();
    if defined.is_empty() {
        return Err(Error::InvalidArgument(
            "AUC undefined: every class lacks positives or negatives".into(),
        ));
    }
    Ok((defined.iter().sum::<f64>() / defined.len() as f64, per))
}

/// Order-independent mean: values are summed in sorted order.
fn stable_mean(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub class: String,
    pub f1: f64,
    /// `null` when the class has no positive or no negative samples.
    pub auc: Option<f64>,
    pub support_pos: usize,
    pub support_neg: usize,
    /// F1 denominator was zero and the score was set to 0.
    pub f1_zero_division: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model_name: String,
    pub bce_loss: f64,
    pub focal_loss: f64,
    pub f1: f64,
    pub auc: f64,
    pub threshold: f64,
    pub n_samples: usize,
    /// Averaging used for `f1` and `auc`.
    pub averaging: String,
    pub focal: FocalLossConfig,
    /// Classes left out of the macro AUC.
    pub auc_excluded: Vec<String>,
    pub per_class: Vec<ClassReport>,
}

impl EvalReport {
    /// Builds the report from raw logits; F1 and AUC use `sigmoid(logits)`.
    pub fn from_logits(
        model_name: &str,
        logits: ArrayView2<'_, f64>,
        targets: ArrayView2<'_, f64>,
        vocabulary: &LabelVocabulary,
        threshold: f64,
        focal: &FocalLossConfig,
    ) -> Result<Self> {
        check_shapes(&logits, &targets)?;
        if logits.ncols() != vocabulary.len() {
            return Err(Error::InvalidArgument(format!(
                "{} logit columns for a {}-class vocabulary",
                logits.ncols(),
                vocabulary.len()
            )));
        }
        if logits.nrows() == 0 {
            return Err(Error::InvalidArgument("cannot evaluate zero samples".into()));
        }
        if logits.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("logits contain non-finite values".into()));
        }
        focal.validate()?;
        let pairs = || logits.iter().zip(targets.iter());
        let bce_loss = stable_mean(pairs().map(|(z, y)| bce_elem(*z, *y)).collect());
        let focal_loss = stable_mean(pairs().map(|(z, y)| focal_elem(*z, *y, focal)).collect());
        let probs = logits.mapv(sigmoid);
        let (f1, confusion) = f1_macro(probs.view(), targets, threshold)?;
        let (auc, aucs) = auc_macro(probs.view(), targets)?;
        let n = logits.nrows();
        let per_class: Vec<ClassReport> = vocabulary
            .classes()
            .iter()
            .zip(confusion.iter().zip(&aucs))
            .enumerate()
            .map(|(c, (class, (conf, auc)))| {
                let pos = targets.column(c).iter().filter(|t| **t == 1.0).count();
                ClassReport {
                    class: class.clone(),
                    f1: conf.f1().unwrap_or(0.0),
                    auc: *auc,
                    support_pos: pos,
                    support_neg: n - pos,
                    f1_zero_division: conf.f1().is_none(),
                }
            })
            .collect();
        Ok(Self {
            model_name: model_name.to_string(),
            bce_loss,
            focal_loss,
            f1,
            auc,
            threshold,
            n_samples: n,
            averaging: "macro".into(),
            focal: *focal,
            auc_excluded: per_class
                .iter()
                .filter(|c| c.auc.is_none())
                .map(|c| c.class.clone())
                .collect(),
            per_class,
        })
    }
}

pub const TABLE_COLUMNS: [&str; 5] = ["Model", "BCE Loss", "F Loss", "F1-Score", "AUC"];

/// Aligned text table, one row per report.
pub fn format_table(reports: &[EvalReport]) -> String {
    let rows: Vec<[String; 5]> = reports
        .iter()
        .map(|r| {
            [
                r.model_name.clone(),
                format!("{:.4}", r.bce_loss),
                format!("{:.4}", r.focal_loss),
                format!("{:.4}", r.f1),
                format!("{:.4}", r.auc),
            ]
        })
        .collect();
    let mut widths = TABLE_COLUMNS.map(str::len);
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: [&str; 5]| {
        let mut s = String::new();
        for (i, (cell, w)) in cells.iter().zip(widths).enumerate() {
            if i == 0 {
                let _ = write!(s, "{cell:<w$}");
            } else {
                let _ = write!(s, " | {cell:>w$}");
            }
        }
        s.push('\n');
        s
    };
    let mut out = line(TABLE_COLUMNS);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&rule.join("-|-"));
    out.push('\n');
    for row in &rows {
        out.push_str(&line([&row[0], &row[1], &row[2], &row[3], &row[4]]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr1, arr2, Array2};

    #[test]
    fn f1_examples() {
        let probs = arr2(&[[1.0], [1.0], [0.0]]);
        let targets = arr2(&[[1.0], [0.0], [0.0]]);
        let (f1, per) = f1_macro(probs.view(), targets.view(), 0.5).unwrap();
        assert_eq!(per[0], Confusion { tp: 1, fp: 1, fn_: 0 });
        assert!((f1 - 2.0 / 3.0).abs() < 1e-15);

        let t = arr2(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]);
        assert_eq!(f1_macro(t.view(), t.view(), 0.5).unwrap().0, 1.0);
        let flipped = t.mapv(|v| 1.0 - v);
        assert_eq!(f1_macro(flipped.view(), t.view(), 0.5).unwrap().0, 0.0);
    }

    #[test]
    fn zero_division_scores_zero() {
        let z = Array2::<f64>::zeros((3, 1));
        let (f1, per) = f1_macro(z.view(), z.view(), 0.5).unwrap();
        assert_eq!(f1, 0.0);
        assert_eq!(per[0].f1(), None);
    }

    #[test]
    fn auc_examples() {
        let s = arr1(&[0.9, 0.8, 0.3, 0.1]);
        let t = arr1(&[1.0, 0.0, 1.0, 0.0]);
        assert_eq!(auc_binary(s.view(), t.view()), Some(0.75));
        let cubed = s.mapv(|v| 5.0 * v * v * v - 2.0);
        assert_eq!(auc_binary(cubed.view(), t.view()), Some(0.75));
        let flat = arr1(&[0.4; 4]);
        assert_eq!(auc_binary(flat.view(), t.view()), Some(0.5));
        assert_eq!(auc_binary(s.view(), arr1(&[1.0; 4]).view()), None);
    }

    #[test]
    fn degenerate_classes_are_excluded() {
        let s = arr2(&[[0.9, 0.2], [0.1, 0.3]]);
        let t = arr2(&[[1.0, 1.0], [0.0, 1.0]]);
        let (auc, per) = auc_macro(s.view(), t.view()).unwrap();
        assert_eq!(per, vec![Some(1.0), None]);
        assert_eq!(auc, 1.0);
        let all_pos = arr2(&[[1.0, 1.0], [1.0, 1.0]]);
        assert!(auc_macro(s.view(), all_pos.view()).is_err());
    }

    fn vocab() -> LabelVocabulary {
        LabelVocabulary::new(["Atelectasis", "Effusion", "Hernia"]).unwrap()
    }

    #[test]
    fn oracle_model_report() {
        let t = arr2(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 0.0]]);
        let logits = t.mapv(|y| 10.0 * y - 10.0 * (1.0 - y));
        let r = EvalReport::from_logits("oracle", logits.view(), t.view(), &vocab(), 0.5, &FocalLossConfig::default())
            .unwrap();
        assert_eq!(r.auc, 1.0);
        assert!(r.bce_loss < 1e-4);
        assert_eq!(r.auc_excluded, vec!["Hernia"]);
        assert!(r.per_class[2].f1_zero_division);
        // Hernia has no positives, so its F1 of 0 drags the macro down
        assert!((r.f1 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.per_class[0].support_pos, 2);
        assert_eq!(r.per_class[0].support_neg, 2);
    }

    #[test]
    fn constant_logits_give_half_auc() {
        let t = arr2(&[[1.0, 0.0, 1.0], [0.0, 1.0, 0.0]]);
        let logits = Array2::from_elem((2, 3), 0.3);
        let r = EvalReport::from_logits("c", logits.view(), t.view(), &vocab(), 0.5, &FocalLossConfig::default())
            .unwrap();
        assert!(r.per_class.iter().all(|c| c.auc == Some(0.5)));
    }

    #[test]
    fn table_has_reference_columns() {
        let t = arr2(&[[1.0, 0.0, 1.0], [0.0, 1.0, 0.0]]);
        let r = EvalReport::from_logits("resnet152", t.view(), t.view(), &vocab(), 0.5, &FocalLossConfig::default())
            .unwrap();
        let table = format_table(&[r]);
        let header = table.lines().next().unwrap();
        let cols: Vec<&str> = header.split('|').map(str::trim).collect();
        assert_eq!(cols, TABLE_COLUMNS);
        assert!(table.lines().nth(2).unwrap().starts_with("resnet152"));
        let lens: Vec<usize> = table.lines().map(str::len).collect();
        assert!(lens.windows(2).all(|w| w[0] == w[1]), "{table}");
    }
}
