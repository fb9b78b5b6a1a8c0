//! Grad-CAM heatmaps at selectable depth, overlays and depth panels.
//!
//! The map for class `c` at a layer with activations `A` (K, h, w) is
//! `relu(sum_k mean(dz_c/dA_k) * A_k)`, divided by its maximum and
//! upsampled bilinearly to the input size.

use std::path::Path;

use cxrlens_nn::{Network, Pass};
use image::imageops::FilterType;
use image::{GrayImage, Rgb, RgbImage};
use ndarray::{Array2, Array3, Array4, ArrayView3, Axis};
use serde::{Deserialize, Serialize};

use crate::dataset::LabelVocabulary;
use crate::error::{Error, Result};
use crate::models::{to_logits, ClassifierModel};
use crate::preprocess::resize_bilinear;
use crate::profile::LayerSelector;

#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    /// Normalized map at input resolution, values in [0, 1].
    pub values: Array2<f32>,
    /// Normalized map at the layer's own resolution.
    pub low_res: Array2<f64>,
    pub source_layer: String,
    pub target_class: String,
    /// Maximum of the rectified map before normalization.
    pub raw_max: f64,
    /// The rectified map was zero everywhere.
    pub zero_map: bool,
}

/// Steps 3 to 5 on captured activations and gradients, both (K, h, w).
/// Returns the normalized map and the raw maximum.
pub fn cam_from(activations: ArrayView3<'_, f32>, gradients: ArrayView3<'_, f32>) -> Result<(Array2<f64>, f64)> {
    if activations.dim() != gradients.dim() {
        return Err(Error::InvalidArgument(format!(
            "activation shape {:?} differs from gradient shape {:?}",
            activations.dim(),
            gradients.dim()
        )));
    }
    let (_, h, w) = activations.dim();
    let mut raw = Array2::<f64>::zeros((h, w));
    for (a, g) in activations.axis_iter(Axis(0)).zip(gradients.axis_iter(Axis(0))) {
        let weight = g.iter().map(|v| *v as f64).sum::<f64>() / (h * w) as f64;
        raw.zip_mut_with(&a, |r, a| *r += weight * *a as f64);
    }
    raw.mapv_inplace(|v| v.max(0.0));
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("class activation map is not finite".into()));
    }
    let max = raw.iter().cloned().fold(0.0, f64::max);
    if max > 0.0 {
        raw.mapv_inplace(|v| v / max);
    }
    Ok((raw, max))
}

/// Grad-CAM on any network: block `layer` is the capture point, `class`
/// the output column. `image` is one standardized (3, H, W) input.
pub fn compute_cam_network(
    net: &mut Network,
    layer: usize,
    image: &Array3<f32>,
    class: usize,
) -> Result<(Array2<f32>, Array2<f64>, f64)> {
    if layer + 1 >= net.len() {
        return Err(Error::InvalidArgument(format!("block {layer} has no successor to differentiate through")));
    }
    let (_, h, w) = image.dim();
    let x = image.clone().insert_axis(Axis(0));
    let pass = Pass {
        train: false,
        record_from: Some(layer + 1),
        capture: Some(layer),
        seed: 0,
    };
    let out = net.forward(&x, &pass);
    let activations = out.captured.expect("capture requested");
    let logits = to_logits(out.output);
    if class >= logits.ncols() {
        net.clear();
        return Err(Error::InvalidArgument(format!("class index {class} out of range")));
    }
    let mut seed = Array4::<f32>::zeros((1, logits.ncols(), 1, 1));
    seed[[0, class, 0, 0]] = 1.0;
    let grads = net
        .backward(seed, layer + 1, true, false)
        .expect("input gradient requested");
    let (low, max) = cam_from(activations.index_axis(Axis(0), 0), grads.index_axis(Axis(0), 0))?;
    let up = resize_bilinear(low.mapv(|v| v as f32).view(), h, w).mapv(|v| v.clamp(0.0, 1.0));
    Ok((up, low, max))
}

/// Grad-CAM for `class` at `layer` on one standardized image, in
/// inference mode. The target is the class logit.
pub fn compute_cam(
    model: &mut ClassifierModel,
    vocabulary: &LabelVocabulary,
    image: &Array3<f32>,
    class: &str,
    layer: &LayerSelector,
) -> Result<Heatmap> {
    let class_index = vocabulary.class_index(class)?;
    if vocabulary.len() != model.num_classes() {
        return Err(Error::InvalidArgument(format!(
            "vocabulary has {} classes, model has {} outputs",
            vocabulary.len(),
            model.num_classes()
        )));
    }
    let s = model.profile().input_size;
    if image.dim() != (3, s, s) {
        return Err(Error::InvalidArgument(format!(
            "image has shape {:?}, expected (3, {s}, {s})",
            image.dim()
        )));
    }
    let handle = model.resolve_layer(layer)?;
    let (values, low_res, raw_max) =
        compute_cam_network(model.network_mut(), handle.index, image, class_index)?;
    Ok(Heatmap {
        values,
        low_res,
        source_layer: handle.name,
        target_class: class.to_string(),
        raw_max,
        zero_map: raw_max == 0.0,
    })
}

/// Heatmaps at the early, middle and final depths, in that order.
pub fn layer_sweep(
    model: &mut ClassifierModel,
    vocabulary: &LabelVocabulary,
    image: &Array3<f32>,
    class: &str,
) -> Result<Vec<(LayerSelector, Heatmap)>> {
    LayerSelector::DEPTHS
        .iter()
        .map(|d| Ok((d.clone(), compute_cam(model, vocabulary, image, class, d)?)))
        .collect()
}

const VIRIDIS: [[f32; 3]; 17] = [
    [0.2670, 0.0049, 0.3294],
    [0.2823, 0.0950, 0.4173],
    [0.2788, 0.1755, 0.4834],
    [0.2590, 0.2515, 0.5247],
    [0.2297, 0.3224, 0.5457],
    [0.1994, 0.3876, 0.5546],
    [0.1727, 0.4488, 0.5579],
    [0.1490, 0.5081, 0.5573],
    [0.1276, 0.5669, 0.5506],
    [0.1206, 0.6258, 0.5335],
    [0.1579, 0.6838, 0.5017],
    [0.2461, 0.7389, 0.4520],
    [0.3692, 0.7889, 0.3829],
    [0.5160, 0.8312, 0.2943],
    [0.6785, 0.8637, 0.1895],
    [0.8456, 0.8873, 0.0997],
    [0.9932, 0.9062, 0.1439],
];

/// Viridis color for `v` in [0, 1] (clamped), as 0..=255 floats.
pub fn colormap(v: f32) -> [f32; 3] {
    let t = v.clamp(0.0, 1.0) * (VIRIDIS.len() - 1) as f32;
    let i = (t.floor() as usize).min(VIRIDIS.len() - 2);
    let f = t - i as f32;
    let (a, b) = (VIRIDIS[i], VIRIDIS[i + 1]);
    [0, 1, 2].map(|c| (a[c] + (b[c] - a[c]) * f) * 255.0)
}

/// Blends the colormapped heatmap over a grayscale image of the same size.
pub fn overlay_on(heatmap: &Array2<f32>, base: &GrayImage, opacity: f32) -> Result<RgbImage> {
    if !(0.0..=1.0).contains(&opacity) {
        return Err(Error::InvalidArgument(format!("opacity must be in [0, 1], got {opacity}")));
    }
    let (h, w) = heatmap.dim();
    if base.dimensions() != (w as u32, h as u32) {
        return Err(Error::InvalidArgument(format!(
            "heatmap is {w}x{h} but the image is {}x{}",
            base.width(),
            base.height()
        )));
    }
    Ok(RgbImage::from_fn(w as u32, h as u32, |x, y| {
        let g = base.get_pixel(x, y)[0] as f32;
        let c = colormap(heatmap[[y as usize, x as usize]]);
        Rgb(c.map(|c| ((1.0 - opacity) * g + opacity * c).round().clamp(0.0, 255.0) as u8))
    }))
}

/// The radiograph at `path` as grayscale, resized to the heatmap.
pub fn display_image(path: &Path, heatmap: &Heatmap) -> Result<GrayImage> {
    let rgb = crate::preprocess::load_rgb(path)?;
    let gray = image::DynamicImage::ImageRgb8(rgb).to_luma8();
    let (h, w) = heatmap.values.dim();
    Ok(image::imageops::resize(&gray, w as u32, h as u32, FilterType::Triangle))
}

/// Overlay of `heatmap` on the radiograph at `path`.
pub fn overlay(heatmap: &Heatmap, path: &Path, opacity: f32) -> Result<RgbImage> {
    overlay_on(&heatmap.values, &display_image(path, heatmap)?, opacity)
}

/// Images side by side with a white gutter, scaled to `tile` pixels.
pub fn panel(images: &[RgbImage], tile: u32) -> RgbImage {
    const GUTTER: u32 = 4;
    let n = images.len() as u32;
    let width = n * tile + n.saturating_sub(1) * GUTTER;
    let mut out = RgbImage::from_pixel(width.max(1), tile, Rgb([255, 255, 255]));
    for (i, img) in images.iter().enumerate() {
        let scaled = image::imageops::resize(img, tile, tile, FilterType::Triangle);
        image::imageops::replace(&mut out, &scaled, (i as u32 * (tile + GUTTER)) as i64, 0);
    }
    out
}

/// JSON written next to every overlay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CamSidecar {
    pub image_id: String,
    pub class: String,
    pub depth: String,
    pub layer: String,
    pub raw_max: f64,
    pub zero_map: bool,
    pub opacity: f32,
    pub checkpoint_sha256: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr2, arr3};

    #[test]
    fn two_by_two_example() {
        let a = arr3(&[[[1.0f32, -1.0], [2.0, 0.0]]]);
        let g = Array3::<f32>::ones((1, 2, 2));
        let (map, max) = cam_from(a.view(), g.view()).unwrap();
        assert_eq!(map, arr2(&[[0.5, 0.0], [1.0, 0.0]]));
        assert_eq!(max, 2.0);
    }

    #[test]
    fn zero_gradient_gives_zero_map() {
        let a = arr3(&[[[1.0f32, 3.0], [2.0, 0.0]]]);
        let (map, max) = cam_from(a.view(), Array3::zeros((1, 2, 2)).view()).unwrap();
        assert_eq!(max, 0.0);
        assert!(map.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn colormap_endpoints() {
        let lo = colormap(0.0);
        let hi = colormap(1.0);
        assert!((lo[0] - 0.2670 * 255.0).abs() < 1e-3);
        assert!((hi[1] - 0.9062 * 255.0).abs() < 1e-3);
        assert_eq!(colormap(-1.0), lo);
        assert_eq!(colormap(2.0), hi);
    }

    #[test]
    fn overlay_blend_identities() {
        let base = GrayImage::from_fn(3, 2, |x, y| image::Luma([(40 * x + 70 * y) as u8]));
        let heat = Array2::from_shape_fn((2, 3), |(y, x)| (x + y) as f32 / 3.0);
        let clear = overlay_on(&heat, &base, 0.0).unwrap();
        for (x, y, p) in clear.enumerate_pixels() {
            let g = base.get_pixel(x, y)[0];
            assert_eq!(p.0, [g, g, g]);
        }
        let opaque = overlay_on(&heat, &base, 1.0).unwrap();
        let c = colormap(heat[[1, 2]]).map(|v| v.round() as u8);
        assert_eq!(opaque.get_pixel(2, 1).0, c);
        assert!(overlay_on(&Array2::zeros((3, 3)), &base, 0.5).is_err());
        assert!(overlay_on(&heat, &base, 1.5).is_err());
    }

    #[test]
    fn panel_layout() {
        let tiles = vec![RgbImage::new(5, 5); 3];
        let p = panel(&tiles, 10);
        assert_eq!(p.dimensions(), (38, 10));
        assert_eq!(p.get_pixel(11, 0).0, [255, 255, 255]);
    }
}
