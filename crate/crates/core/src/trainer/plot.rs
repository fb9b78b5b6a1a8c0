use std::path::Path;

use image::{Rgb, RgbImage};

use crate::error::{Error, Result};

const W: u32 = 640;
const H: u32 = 400;
const MARGIN: u32 = 40;

fn line(img: &mut RgbImage, (x0, y0): (i64, i64), (x1, y1): (i64, i64), color: Rgb<u8>) {
    let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
    let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
    let (mut x, mut y, mut err) = (x0, y0, dx + dy);
    loop {
        if (0..W as i64).contains(&x) && (0..H as i64).contains(&y) {
            img.put_pixel(x as u32, y as u32, color);
        }
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

/// Draws mean epoch loss against epoch: axes, a light grid with one
/// vertical line per epoch, and the curve with a marker per point.
pub fn render_loss_curve(losses: &[f64], path: &Path) -> Result<()> {
    let mut img = RgbImage::from_pixel(W, H, Rgb([255, 255, 255]));
    let (left, right) = (MARGIN as i64, (W - MARGIN / 2) as i64);
    let (top, bottom) = ((MARGIN / 2) as i64, (H - MARGIN) as i64);
    let grid = Rgb([225, 225, 225]);
    let axis = Rgb([40, 40, 40]);
    let curve = Rgb([31, 119, 180]);

    let finite: Vec<f64> = losses.iter().copied().filter(|v| v.is_finite()).collect();
    let hi = finite.iter().cloned().fold(f64::MIN, f64::max).max(1e-12);
    let lo = finite.iter().cloned().fold(f64::MAX, f64::min).min(hi).max(0.0);
    let lo = if hi - lo < 1e-12 { 0.0 } else { lo };
    let span = (hi - lo).max(1e-12);
    let n = losses.len();
    let px = |i: usize| -> i64 {
        if n <= 1 {
            (left + right) / 2
        } else {
            left + ((right - left) as f64 * i as f64 / (n - 1) as f64).round() as i64
        }
    };
    let py = |v: f64| bottom - ((bottom - top) as f64 * (v - lo) / span).round() as i64;

    for k in 1..=4 {
        let y = bottom - (bottom - top) * k / 4;
        line(&mut img, (left, y), (right, y), grid);
    }
    for i in 0..n {
        line(&mut img, (px(i), top), (px(i), bottom), grid);
    }
    line(&mut img, (left, top), (left, bottom), axis);
    line(&mut img, (left, bottom), (right, bottom), axis);
    for i in 0..n {
        line(&mut img, (px(i), bottom), (px(i), bottom + 4), axis);
    }

    let points: Vec<(i64, i64)> = losses
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .map(|(i, v)| (px(i), py(*v)))
        .collect();
    for w in points.windows(2) {
        for off in [-1, 0, 1] {
            line(&mut img, (w[0].0, w[0].1 + off), (w[1].0, w[1].1 + off), curve);
        }
    }
    for &(x, y) in &points {
        for d in -3..=3 {
            line(&mut img, (x - 3, y + d), (x + 3, y + d), curve);
        }
    }
    img.save(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_a_png_with_the_curve() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.png");
        render_loss_curve(&[0.7, 0.4, 0.3, 0.25], &p).unwrap();
        let img = image::open(&p).unwrap().to_rgb8();
        assert_eq!(img.dimensions(), (W, H));
        assert!(img.pixels().any(|p| *p == Rgb([31, 119, 180])));
        render_loss_curve(&[], &p).unwrap();
        render_loss_curve(&[1.0], &p).unwrap();
    }
}
