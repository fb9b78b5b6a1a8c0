//! Procedural data: a small radiograph-like corpus in the NIH file layout,
//! a shape-recognition task for desk-scale experiments, and the source
//! task used to pretrain backbones when no real weights are at hand.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use cxrlens_nn::Adam;
use image::{GrayImage, Luma};
use ndarray::{Array2, Array3};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{LabelVocabulary, NO_FINDING};
use crate::error::{Error, Result};
use crate::loader::ImageSet;
use crate::losses::LossConfig;
use crate::models::{ClassifierModel, FreezePolicy, ModelSpec, WeightStore};
use crate::profile::{Arch, ArchProfile};
use crate::trainer::train_step;

/// A grayscale canvas with values in [0, 1], row-major (y, x).
pub type Canvas = Array2<f32>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Disk,
    Square,
    Triangle,
    Cross,
    Ring,
    HBar,
    VBar,
    Diamond,
}

impl Shape {
    pub const ALL: [Shape; 8] = [
        Shape::Disk,
        Shape::Square,
        Shape::Triangle,
        Shape::Cross,
        Shape::Ring,
        Shape::HBar,
        Shape::VBar,
        Shape::Diamond,
    ];

    /// Whether the offset `(dx, dy)` from the centre, in units of the
    /// shape's radius, lies inside the shape.
    pub fn contains(self, dx: f32, dy: f32) -> bool {
        let (ax, ay) = (dx.abs(), dy.abs());
        match self {
            Shape::Disk => dx * dx + dy * dy <= 1.0,
            Shape::Square => ax <= 0.8 && ay <= 0.8,
            Shape::Triangle => dy <= 0.8 && dy >= -1.0 + 1.8 * ax / 1.0 && ax <= 1.0,
            Shape::Cross => (ax <= 0.3 && ay <= 1.0) || (ay <= 0.3 && ax <= 1.0),
            Shape::Ring => {
                let r2 = dx * dx + dy * dy;
                (0.45..=1.0).contains(&r2)
            }
            Shape::HBar => ax <= 1.0 && ay <= 0.3,
            Shape::VBar => ax <= 0.3 && ay <= 1.0,
            Shape::Diamond => ax + ay <= 1.0,
        }
    }
}

/// Adds `amplitude` inside `shape` centred at `(cx, cy)` with radius `r`.
pub fn draw(canvas: &mut Canvas, shape: Shape, cx: f32, cy: f32, r: f32, amplitude: f32) {
    let (h, w) = canvas.dim();
    let y0 = ((cy - r).floor().max(0.0)) as usize;
    let y1 = ((cy + r).ceil() as usize).min(h.saturating_sub(1));
    let x0 = ((cx - r).floor().max(0.0)) as usize;
    let x1 = ((cx + r).ceil() as usize).min(w.saturating_sub(1));
    for y in y0..=y1 {
        for x in x0..=x1 {
            let (dx, dy) = ((x as f32 + 0.5 - cx) / r, (y as f32 + 0.5 - cy) / r);
            if shape.contains(dx, dy) {
                canvas[[y, x]] += amplitude;
            }
        }
    }
}

/// Smooth random background plus pixel noise.
fn background(size: usize, rng: &mut impl Rng) -> Canvas {
    let base = rng.random_range(0.2..0.45f32);
    let (gx, gy) = (rng.random_range(-0.15..0.15f32), rng.random_range(-0.15..0.15f32));
    let noise = Normal::new(0.0f32, 0.04).expect("valid sigma");
    Canvas::from_shape_fn((size, size), |(y, x)| {
        let (u, v) = (x as f32 / size as f32 - 0.5, y as f32 / size as f32 - 0.5);
        base + gx * u + gy * v + noise.sample(rng)
    })
}

fn place(shape: Shape, canvas: &mut Canvas, rng: &mut impl Rng) {
    let size = canvas.dim().0 as f32;
    let r = rng.random_range(0.12..0.22f32) * size;
    let cx = rng.random_range(r..size - r);
    let cy = rng.random_range(r..size - r);
    let amp = rng.random_range(0.25..0.5f32);
    draw(canvas, shape, cx, cy, r, amp);
}

fn clamp(mut c: Canvas) -> Canvas {
    c.mapv_inplace(|v| v.clamp(0.0, 1.0));
    c
}

/// A grayscale canvas replicated to three standardized channels.
pub fn standardize_canvas(canvas: &Canvas, profile: &ArchProfile) -> Array3<f32> {
    let (h, w) = canvas.dim();
    Array3::from_shape_fn((3, h, w), |(c, y, x)| {
        (canvas[[y, x]] - profile.norm_mean[c]) / profile.norm_std[c]
    })
}

pub fn to_gray_image(canvas: &Canvas) -> GrayImage {
    let (h, w) = canvas.dim();
    GrayImage::from_fn(w as u32, h as u32, |x, y| {
        Luma([(canvas[[y as usize, x as usize]].clamp(0.0, 1.0) * 255.0).round() as u8])
    })
}

/// Images with exactly one of `classes` each, in a balanced cycle, as an
/// in-memory set with one-hot targets.
pub fn shapes_dataset(
    n: usize,
    classes: &[Shape],
    profile: &ArchProfile,
    seed: u64,
) -> Result<ImageSet> {
    if classes.is_empty() {
        return Err(Error::InvalidArgument("at least one shape class is needed".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = profile.input_size;
    let mut images = Vec::with_capacity(n);
    let mut targets = Array2::zeros((n, classes.len()));
    for i in 0..n {
        let k = i % classes.len();
        let mut c = background(size, &mut rng);
        place(classes[k], &mut c, &mut rng);
        images.push(standardize_canvas(&clamp(c), profile));
        targets[[i, k]] = 1.0;
    }
    let ids = (0..n).map(|i| format!("shape_{i:05}")).collect();
    ImageSet::from_tensors(ids, images, targets, profile)
}

pub fn shape_vocabulary(classes: &[Shape]) -> Result<LabelVocabulary> {
    LabelVocabulary::new(classes.iter().map(|s| {
        serde_json::to_value(s).expect("serializable").as_str().expect("string").to_string()
    }))
}

/// Source task: one shape of a uniformly drawn kind per image. Returns the
/// canvas and its one-hot target over `Shape::ALL`.
pub fn source_sample(size: usize, rng: &mut impl Rng) -> (Canvas, Vec<f64>) {
    let mut c = background(size, rng);
    let k = rng.random_range(0..Shape::ALL.len());
    place(Shape::ALL[k], &mut c, rng);
    let mut target = vec![0.0; Shape::ALL.len()];
    target[k] = 1.0;
    (clamp(c), target)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PretrainConfig {
    pub arch: Arch,
    pub width_divisor: usize,
    pub input_size: usize,
    pub steps: usize,
    pub batch: usize,
    pub lr: f64,
    pub seed: u64,
}

impl PretrainConfig {
    /// Settings that give useful backbones in a few minutes on one core.
    pub fn desk(arch: Arch) -> Self {
        Self {
            arch,
            width_divisor: crate::profile::DESK_WIDTH_DIVISOR,
            input_size: arch.desk_input_size(),
            steps: 400,
            batch: 16,
            lr: 1e-3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PretrainReport {
    pub path: PathBuf,
    pub first_loss: f64,
    pub last_loss: f64,
}

/// Trains a whole network on the source task and writes its backbone to
/// `store`.
pub fn pretrain(cfg: &PretrainConfig, store: &WeightStore) -> Result<PretrainReport> {
    if cfg.steps == 0 || cfg.batch == 0 {
        return Err(Error::InvalidArgument("steps and batch must be positive".into()));
    }
    let spec = ModelSpec::new(cfg.arch, Shape::ALL.len())
        .pretrained(false)
        .freeze(FreezePolicy::None)
        .width_divisor(cfg.width_divisor)
        .input_size(cfg.input_size)
        .zero_init_residual(true)
        .seed(cfg.seed);
    let mut model = ClassifierModel::build(&spec, None)?;
    let profile = model.profile().clone();
    let mut adam = Adam::new(Default::default());
    let loss = LossConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(7);
    let window = cfg.steps.clamp(1, 20);
    let mut losses = Vec::with_capacity(cfg.steps);
    let s = cfg.input_size;
    for step in 0..cfg.steps {
        let mut x = ndarray::Array4::zeros((cfg.batch, 3, s, s));
        let mut y = Array2::zeros((cfg.batch, Shape::ALL.len()));
        for b in 0..cfg.batch {
            let (c, t) = source_sample(s, &mut rng);
            x.index_axis_mut(ndarray::Axis(0), b).assign(&standardize_canvas(&c, &profile));
            for (k, v) in t.into_iter().enumerate() {
                y[[b, k]] = v;
            }
        }
        losses.push(train_step(&mut model, &mut adam, &x, &y, cfg.lr, &loss, step as u64)?);
    }
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let path = store.save_from(&model)?;
    Ok(PretrainReport {
        path,
        first_loss: mean(&losses[..window]),
        last_loss: mean(&losses[losses.len() - window..]),
    })
}

/// Files of a generated NIH-style corpus.
#[derive(Debug, Clone)]
pub struct NihFixture {
    pub root: PathBuf,
    pub image_root: PathBuf,
    pub manifest: PathBuf,
    pub train_list: PathBuf,
    pub test_list: PathBuf,
}

/// Findings drawn by the fixture, each with its own lesion shape and lung
/// position so that labels are learnable.
const FINDINGS: [(&str, Shape, f32, f32); 5] = [
    ("Atelectasis", Shape::HBar, 0.33, 0.65),
    ("Effusion", Shape::Disk, 0.68, 0.72),
    ("Infiltration", Shape::Ring, 0.32, 0.4),
    ("Nodule", Shape::Diamond, 0.7, 0.38),
    ("Cardiomegaly", Shape::Disk, 0.52, 0.62),
];

fn radiograph(size: usize, labels: &[usize], rng: &mut impl Rng) -> Canvas {
    let s = size as f32;
    let noise = Normal::new(0.0f32, 0.03).expect("valid sigma");
    let mut c = Canvas::from_shape_fn((size, size), |(y, x)| {
        let (u, v) = (x as f32 / s - 0.5, y as f32 / s - 0.45);
        let body = (-(u * u) / 0.12).exp() * 0.55 + 0.15;
        let lung = |cx: f32| {
            let (du, dv) = ((u - cx) / 0.17, v / 0.3);
            if du * du + dv * dv <= 1.0 {
                -0.3
            } else {
                0.0
            }
        };
        let spine = if u.abs() < 0.04 { 0.15 } else { 0.0 };
        body + lung(-0.2) + lung(0.2) + spine + noise.sample(rng)
    });
    for &k in labels {
        let (_, shape, fx, fy) = FINDINGS[k];
        let r = s * rng.random_range(0.07..0.1);
        let jitter = s * 0.03;
        let cx = fx * s + rng.random_range(-jitter..jitter);
        let cy = fy * s + rng.random_range(-jitter..jitter);
        draw(&mut c, shape, cx, cy, r, 0.35);
    }
    clamp(c)
}

/// Writes `n` PNG radiographs, a `Data_Entry_2017.csv` style manifest and
/// train/test id lists (every fifth image is a test image).
pub fn write_nih_fixture(dir: &Path, n: usize, size: usize, seed: u64) -> Result<NihFixture> {
    let image_root = dir.join("images");
    std::fs::create_dir_all(&image_root).map_err(|e| Error::io(&image_root, e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut csv = String::from(
        "Image Index,Finding Labels,Follow-up #,Patient ID,Patient Age,Patient Gender,View Position\n",
    );
    let (mut train, mut test) = (String::new(), String::new());
    for i in 0..n {
        let id = format!("{:08}_000.png", i + 1);
        // every finding appears at least once among the first images
        let mut labels: Vec<usize> = if i < FINDINGS.len() {
            vec![i]
        } else {
            (0..FINDINGS.len()).filter(|_| rng.random_bool(0.3)).collect()
        };
        labels.sort_unstable();
        let canvas = radiograph(size, &labels, &mut rng);
        let path = image_root.join(&id);
        to_gray_image(&canvas).save(&path).map_err(|source| Error::Image {
            path: path.clone(),
            source,
        })?;
        let cell = if labels.is_empty() {
            NO_FINDING.to_string()
        } else {
            labels.iter().map(|k| FINDINGS[*k].0).collect::<Vec<_>>().join("|")
        };
        let gender = ["M", "F"].choose(&mut rng).expect("non-empty");
        writeln!(csv, "{id},{cell},0,{},{},{gender},PA", i + 1, rng.random_range(20..80)).ok();
        let list = if i % 5 == 4 { &mut test } else { &mut train };
        writeln!(list, "{id}").ok();
    }
    let write = |name: &str, text: &str| -> Result<PathBuf> {
        let p = dir.join(name);
        std::fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        Ok(p)
    };
    Ok(NihFixture {
        root: dir.to_path_buf(),
        manifest: write("Data_Entry_2017.csv", &csv)?,
        train_list: write("train_val_list.txt", &train)?,
        test_list: write("test_list.txt", &test)?,
        image_root,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{build_splits, parse_label_manifest, read_id_list};

    #[test]
    fn shapes_are_distinct_masks() {
        let masks: Vec<Vec<bool>> = Shape::ALL
            .iter()
            .map(|s| {
                let mut c = Canvas::zeros((21, 21));
                draw(&mut c, *s, 10.5, 10.5, 9.0, 1.0);
                c.iter().map(|v| *v > 0.0).collect()
            })
            .collect();
        for i in 0..masks.len() {
            assert!(masks[i].iter().any(|b| *b), "{:?} is empty", Shape::ALL[i]);
            for j in 0..i {
                assert_ne!(masks[i], masks[j], "{:?} vs {:?}", Shape::ALL[i], Shape::ALL[j]);
            }
        }
    }

    #[test]
    fn shapes_dataset_is_balanced_and_seeded() {
        let profile = ArchProfile::new(Arch::Resnet152).with_input_size(32);
        let classes = [Shape::Disk, Shape::Square, Shape::Cross];
        let mut a = shapes_dataset(9, &classes, &profile, 1).unwrap();
        let mut b = shapes_dataset(9, &classes, &profile, 1).unwrap();
        assert_eq!(a.targets().sum_axis(ndarray::Axis(0)).to_vec(), vec![3.0; 3]);
        assert_eq!(a.image(4).unwrap(), b.image(4).unwrap());
        let v = shape_vocabulary(&classes).unwrap();
        assert_eq!(v.classes(), ["disk", "square", "cross"]);
    }

    #[test]
    fn nih_fixture_parses() {
        let dir = tempfile::tempdir().unwrap();
        let fx = write_nih_fixture(dir.path(), 12, 48, 3).unwrap();
        let parsed = parse_label_manifest(&fx.manifest, &fx.image_root).unwrap();
        assert!(parsed.missing_files.is_empty());
        let vocab = LabelVocabulary::nih();
        let records = crate::dataset::encode_rows(parsed.rows, &vocab).unwrap();
        assert_eq!(read_id_list(&fx.test_list).unwrap().len(), 2);
        let (tr, te, _) = build_splits(records, &vocab, &fx.train_list, &fx.test_list).unwrap();
        assert_eq!((tr.len(), te.len()), (10, 2));
        let img = image::open(&tr.records[0].path).unwrap();
        assert_eq!((img.width(), img.height()), (48, 48));
    }

    #[test]
    fn pretraining_fills_the_store_and_learns() {
        let dir = tempfile::tempdir().unwrap();
        let store = WeightStore::new(dir.path());
        let cfg = PretrainConfig {
            steps: 60,
            width_divisor: 16,
            input_size: 63,
            ..PretrainConfig::desk(Arch::Alexnet)
        };
        let report = pretrain(&cfg, &store).unwrap();
        assert!(store.contains(Arch::Alexnet, 16));
        assert!(report.last_loss < report.first_loss, "{report:?}");
        let spec = ModelSpec::new(Arch::Alexnet, 3).width_divisor(16).input_size(63);
        ClassifierModel::build(&spec, Some(&store)).unwrap();
    }
}
