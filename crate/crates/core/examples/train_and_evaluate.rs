//! Fine-tunes a reduced ResNet-152 on a three-shape task, then scores it on
//! held-out images. Artifacts go to a temporary run directory.
//!
//!     cargo run --release --example train_and_evaluate

use cxrlens::evaluate::{evaluate, EvalConfig};
use cxrlens::metrics::format_table;
use cxrlens::models::{ClassifierModel, FreezePolicy, ModelSpec};
use cxrlens::profile::{Arch, DESK_WIDTH_DIVISOR};
use cxrlens::synthetic::{shape_vocabulary, shapes_dataset, Shape};
use cxrlens::trainer::{train, RunOutput, TrainConfig};

fn main() -> cxrlens::Result<()> {
    let classes = [Shape::HBar, Shape::VBar, Shape::Ring];
    let vocab = shape_vocabulary(&classes)?;
    let spec = ModelSpec::new(Arch::Resnet152, classes.len())
        .pretrained(false)
        .freeze(FreezePolicy::None)
        .width_divisor(DESK_WIDTH_DIVISOR)
        .input_size(48)
        .seed(1);
    let mut model = ClassifierModel::build(&spec, None)?;
    let mut train_set = shapes_dataset(96, &classes, model.profile(), 1)?;
    let mut test_set = shapes_dataset(48, &classes, model.profile(), 2)?;

    let cfg = TrainConfig {
        epochs: 4,
        batch_train: 16,
        base_lr: 1e-3,
        lr_step_epochs: 2,
        ..TrainConfig::default()
    };
    let dir = tempfile::tempdir().expect("temporary directory");
    let out = RunOutput {
        dir: Some(dir.path().to_path_buf()),
        verbose: true,
    };
    let history = train(&mut model, &mut train_set, &vocab, &cfg, &out)?;
    println!("checkpoints: {}", history.checkpoints.len());

    let report = evaluate(&mut model, &mut test_set, &vocab, "resnet152", &EvalConfig::default())?;
    print!("{}", format_table(&[report]));
    Ok(())
}
