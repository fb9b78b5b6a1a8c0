//! Builds each architecture at reduced width, shows its trainable groups
//! under the default freeze policy and the layers used for heatmaps.
//!
//!     cargo run --release --example model_zoo

use cxrlens::models::{ClassifierModel, ModelSpec};
use cxrlens::profile::{Arch, LayerSelector, DESK_WIDTH_DIVISOR};
use ndarray::Array4;

fn main() -> cxrlens::Result<()> {
    for arch in Arch::ALL {
        let spec = ModelSpec::new(arch, 14)
            .pretrained(false)
            .width_divisor(DESK_WIDTH_DIVISOR)
            .input_size(arch.desk_input_size());
        let mut model = ClassifierModel::build(&spec, None)?;
        let s = arch.desk_input_size();
        let logits = model.logits(&Array4::zeros((2, 3, s, s)));
        println!(
            "{arch}: {} parameters, logits {:?}, trainable {:?}",
            model.network().param_count(),
            logits.dim(),
            model.trainable_parameters()
        );
        for depth in LayerSelector::DEPTHS {
            let handle = model.resolve_layer(&depth)?;
            println!("  {depth:<6} -> {} (block {})", handle.name, handle.index);
        }
    }
    Ok(())
}
