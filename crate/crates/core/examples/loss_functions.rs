//! BCE and focal loss on a few logits, showing how focal loss shrinks the
//! contribution of confidently correct predictions.
//!
//!     cargo run --example loss_functions

use cxrlens::losses::{bce_elem, focal_elem, FocalLossConfig, AlphaMode};

fn main() {
    let focal = FocalLossConfig::default();
    let balanced = FocalLossConfig {
        alpha_mode: AlphaMode::Balanced,
        ..focal
    };
    println!("{:>6} {:>3} {:>10} {:>10} {:>10}", "logit", "y", "bce", "focal", "balanced");
    for z in [-4.0, -1.0, 0.0, 1.0, 4.0] {
        for y in [0.0, 1.0] {
            println!(
                "{z:>6.1} {y:>3} {:>10.5} {:>10.5} {:>10.5}",
                bce_elem(z, y),
                focal_elem(z, y, &focal),
                focal_elem(z, y, &balanced)
            );
        }
    }
    let plain = FocalLossConfig::new(1.0, 0.0);
    println!("\nwith alpha = 1, gamma = 0 focal equals bce: {} == {}", focal_elem(0.7, 1.0, &plain), bce_elem(0.7, 1.0));
}
