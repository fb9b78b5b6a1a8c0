//! Macro F1 and AUC on hand-made scores, and the aligned report table.
//!
//!     cargo run --example evaluation_report

use cxrlens::dataset::LabelVocabulary;
use cxrlens::losses::FocalLossConfig;
use cxrlens::metrics::{auc_binary, format_table, EvalReport};
use ndarray::{arr1, arr2};

fn main() -> cxrlens::Result<()> {
    let scores = arr1(&[0.9, 0.8, 0.3, 0.1]);
    let targets = arr1(&[1.0, 0.0, 1.0, 0.0]);
    println!("pairwise AUC = {:?}", auc_binary(scores.view(), targets.view()));

    let vocab = LabelVocabulary::new(["Atelectasis", "Effusion", "Hernia"])?;
    let targets = arr2(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 0.0]]);
    let oracle = targets.mapv(|y| if y == 1.0 { 10.0 } else { -10.0 });
    let noisy = arr2(&[[0.4, -0.2, -3.0], [0.1, 0.3, -2.5], [-0.3, 0.8, -2.0], [-0.6, 0.2, -3.1]]);
    let focal = FocalLossConfig::default();
    let reports = [
        EvalReport::from_logits("oracle", oracle.view(), targets.view(), &vocab, 0.5, &focal)?,
        EvalReport::from_logits("noisy", noisy.view(), targets.view(), &vocab, 0.5, &focal)?,
    ];
    print!("{}", format_table(&reports));
    println!("left out of the macro AUC: {:?}", reports[1].auc_excluded);
    Ok(())
}
