//! Image loading, standardization and augmentation.

use std::path::Path;

use image::imageops::FilterType;
use image::RgbImage;
use ndarray::{s, Array2, Array3, ArrayView2, ArrayView3, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::ArchProfile;

/// Decodes an image, replicates grayscale to RGB, resizes it bilinearly to
/// the profile's square input and standardizes each channel. The result has
/// shape (3, size, size).
pub fn load_and_standardize(path: impl AsRef<Path>, profile: &ArchProfile) -> Result<Array3<f32>> {
    let rgb = load_rgb(path)?;
    let size = profile.input_size as u32;
    let resized = if rgb.dimensions() == (size, size) {
        rgb
    } else {
        image::imageops::resize(&rgb, size, size, FilterType::Triangle)
    };
    Ok(standardize(&resized, profile.norm_mean, profile.norm_std))
}

pub fn load_rgb(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let img = image::ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?;
    Ok(img.to_rgb8())
}

/// `(x / 255 - mean[c]) / std[c]` per channel.
pub fn standardize(img: &RgbImage, mean: [f32; 3], std: [f32; 3]) -> Array3<f32> {
    let (w, h) = img.dimensions();
    let mut out = Array3::<f32>::zeros((3, h as usize, w as usize));
    for (x, y, px) in img.enumerate_pixels() {
        for c in 0..3 {
            out[[c, y as usize, x as usize]] = (px[c] as f32 / 255.0 - mean[c]) / std[c];
        }
    }
    out
}

/// Inverse of [`standardize`], in 0..=255 intensity units (not rounded).
pub fn destandardize(t: &Array3<f32>, mean: [f32; 3], std: [f32; 3]) -> Array3<f32> {
    let mut out = t.clone();
    for (c, mut plane) in out.axis_iter_mut(Axis(0)).enumerate() {
        plane.mapv_inplace(|v| (v * std[c] + mean[c]) * 255.0);
    }
    out
}

/// Bilinear resampling with half-pixel centres and edge clamping.
pub fn resize_bilinear(src: ArrayView2<'_, f32>, out_h: usize, out_w: usize) -> Array2<f32> {
    let (h, w) = src.dim();
    let axis = |out: usize, len: usize| -> Vec<(usize, usize, f32)> {
        let scale = len as f32 / out as f32;
        (0..out)
            .map(|o| {
                let p = ((o as f32 + 0.5) * scale - 0.5).max(0.0);
                let i0 = (p.floor() as usize).min(len - 1);
                let i1 = (i0 + 1).min(len - 1);
                (i0, i1, p - i0 as f32)
            })
            .collect()
    };
    let (ys, xs) = (axis(out_h, h), axis(out_w, w));
    Array2::from_shape_fn((out_h, out_w), |(oy, ox)| {
        let (y0, y1, fy) = ys[oy];
        let (x0, x1, fx) = xs[ox];
        let top = src[[y0, x0]] * (1.0 - fx) + src[[y0, x1]] * fx;
        let bottom = src[[y1, x0]] * (1.0 - fx) + src[[y1, x1]] * fx;
        top * (1.0 - fy) + bottom * fy
    })
}

fn resize_channels(src: ArrayView3<'_, f32>, out_h: usize, out_w: usize) -> Array3<f32> {
    let mut out = Array3::zeros((src.dim().0, out_h, out_w));
    for (mut dst, plane) in out.outer_iter_mut().zip(src.outer_iter()) {
        dst.assign(&resize_bilinear(plane, out_h, out_w));
    }
    out
}

pub fn flip_horizontal(t: &Array3<f32>) -> Array3<f32> {
    t.slice(s![.., .., ..;-1]).to_owned()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    Train,
    Eval,
}

/// Training-time augmentation: random resized crop then horizontal flip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Augmentation {
    /// Crop area as a fraction of the source area.
    pub crop_scale: (f64, f64),
    /// Crop aspect ratio (width / height), sampled log-uniformly.
    pub crop_ratio: (f64, f64),
    pub flip_probability: f64,
}

impl Default for Augmentation {
    fn default() -> Self {
        Self {
            crop_scale: (0.8, 1.0),
            crop_ratio: (3.0 / 4.0, 4.0 / 3.0),
            flip_probability: 0.5,
        }
    }
}

/// A crop window in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CropBox {
    pub top: usize,
    pub left: usize,
    pub height: usize,
    pub width: usize,
}

impl Augmentation {
    /// Samples a crop window for an `h` x `w` image. Falls back to the
    /// whole image after ten rejected draws.
    pub fn sample_crop(&self, h: usize, w: usize, rng: &mut impl Rng) -> CropBox {
        let area = (h * w) as f64;
        let (lr0, lr1) = (self.crop_ratio.0.ln(), self.crop_ratio.1.ln());
        for _ in 0..10 {
            let target = area * rng.random_range(self.crop_scale.0..=self.crop_scale.1);
            let aspect = rng.random_range(lr0..=lr1).exp();
            let cw = (target * aspect).sqrt().round() as usize;
            let ch = (target / aspect).sqrt().round() as usize;
            if cw > 0 && ch > 0 && cw <= w && ch <= h {
                return CropBox {
                    top: rng.random_range(0..=h - ch),
                    left: rng.random_range(0..=w - cw),
                    height: ch,
                    width: cw,
                };
            }
        }
        CropBox {
            top: 0,
            left: 0,
            height: h,
            width: w,
        }
    }

    /// Applies the policy. `Eval` returns the input unchanged; `Train` is a
    /// pure function of `(image, seed)`.
    pub fn apply(&self, image: &Array3<f32>, seed: u64, policy: Policy) -> Array3<f32> {
        if policy == Policy::Eval {
            return image.clone();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (_, h, w) = image.dim();
        let b = self.sample_crop(h, w, &mut rng);
        let view = image.slice(s![.., b.top..b.top + b.height, b.left..b.left + b.width]);
        let out = if (b.height, b.width) == (h, w) {
            view.to_owned()
        } else {
            resize_channels(view, h, w)
        };
        if rng.random_bool(self.flip_probability) {
            flip_horizontal(&out)
        } else {
            out
        }
    }
}

/// [`Augmentation::apply`] with the default settings.
pub fn augment(image: &Array3<f32>, seed: u64, policy: Policy) -> Array3<f32> {
    Augmentation::default().apply(image, seed, policy)
}

/// Converts a standardized tensor back to an 8-bit image.
pub fn to_rgb_image(t: &Array3<f32>, mean: [f32; 3], std: [f32; 3]) -> RgbImage {
    let raw = destandardize(t, mean, std);
    let (_, h, w) = raw.dim();
    RgbImage::from_fn(w as u32, h as u32, |x, y| {
        image::Rgb(std::array::from_fn(|c| {
            raw[[c, y as usize, x as usize]].round().clamp(0.0, 255.0) as u8
        }))
    })
}
