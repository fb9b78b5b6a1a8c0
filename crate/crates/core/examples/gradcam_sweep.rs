//! Grad-CAM at early, middle and final depth for one image, written as
//! overlays and a side-by-side panel.
//!
//!     cargo run --release --example gradcam_sweep -- /tmp/cams

use cxrlens::gradcam::{layer_sweep, overlay_on, panel};
use cxrlens::models::{ClassifierModel, FreezePolicy, ModelSpec};
use cxrlens::profile::{Arch, DESK_WIDTH_DIVISOR};
use cxrlens::synthetic::{draw, shape_vocabulary, shapes_dataset, standardize_canvas, to_gray_image, Canvas, Shape};
use cxrlens::trainer::{train, RunOutput, TrainConfig};

fn main() -> cxrlens::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| std::env::temp_dir().join("cxrlens_cams").display().to_string());
    std::fs::create_dir_all(&out).map_err(|e| cxrlens::Error::io(&out, e))?;

    let classes = [Shape::Disk, Shape::Cross];
    let vocab = shape_vocabulary(&classes)?;
    let spec = ModelSpec::new(Arch::Resnet152, 2)
        .pretrained(false)
        .freeze(FreezePolicy::None)
        .zero_init_residual(true)
        .width_divisor(DESK_WIDTH_DIVISOR)
        .input_size(64);
    let mut model = ClassifierModel::build(&spec, None)?;
    let mut data = shapes_dataset(64, &classes, model.profile(), 3)?;
    let cfg = TrainConfig {
        epochs: 6,
        batch_train: 16,
        base_lr: 1e-3,
        ..TrainConfig::default()
    };
    train(&mut model, &mut data, &vocab, &cfg, &RunOutput::default())?;

    let mut canvas = Canvas::from_elem((64, 64), 0.3);
    draw(&mut canvas, Shape::Cross, 40.0, 22.0, 11.0, 0.45);
    let image = standardize_canvas(&canvas, model.profile());
    let base = to_gray_image(&canvas);
    let mut tiles = Vec::new();
    for (depth, map) in layer_sweep(&mut model, &vocab, &image, "cross")? {
        println!(
            "{depth:<6} {:<10} low-res {:?} raw max {:.3e}",
            map.source_layer,
            map.low_res.dim(),
            map.raw_max
        );
        let img = overlay_on(&map.values, &base, 0.5)?;
        let path = format!("{out}/cross_{depth}.png");
        img.save(&path).map_err(|source| cxrlens::Error::Image { path: path.clone().into(), source })?;
        tiles.push(img);
    }
    let path = format!("{out}/panel_cross.png");
    panel(&tiles, 192)
        .save(&path)
        .map_err(|source| cxrlens::Error::Image { path: path.clone().into(), source })?;
    println!("wrote {path}");
    Ok(())
}
