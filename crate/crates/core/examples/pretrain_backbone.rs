//! Pretrains a reduced AlexNet on the synthetic source task and loads the
//! result as the backbone of a new 14-class model.
//!
//!     cargo run --release --example pretrain_backbone

use cxrlens::models::{ClassifierModel, ModelSpec, WeightStore};
use cxrlens::profile::Arch;
use cxrlens::synthetic::{pretrain, PretrainConfig};

fn main() -> cxrlens::Result<()> {
    let dir = tempfile::tempdir().expect("temporary directory");
    let store = WeightStore::new(dir.path());
    let cfg = PretrainConfig {
        steps: 150,
        ..PretrainConfig::desk(Arch::Alexnet)
    };
    let report = pretrain(&cfg, &store)?;
    println!(
        "source-task loss {:.4} -> {:.4}, stored at {}",
        report.first_loss,
        report.last_loss,
        report.path.display()
    );
    let spec = ModelSpec::new(Arch::Alexnet, 14)
        .width_divisor(cfg.width_divisor)
        .input_size(cfg.input_size);
    let model = ClassifierModel::build(&spec, Some(&store))?;
    println!("trainable after loading: {:?}", model.trainable_parameters());
    Ok(())
}
