//! Batches of standardized images and targets for a split.

use std::path::PathBuf;

use ndarray::{Array2, Array3, Array4, Axis};

use crate::dataset::DatasetSplit;
use crate::error::{Error, Result};
use crate::preprocess::{load_and_standardize, Augmentation, Policy};
use crate::profile::ArchProfile;

/// Decoded images are kept in memory up to this many bytes.
pub const DEFAULT_CACHE_BYTES: usize = 1 << 30;

enum Source {
    Files(Vec<PathBuf>),
    Memory,
}

/// The images of a split at one architecture's input size.
pub struct ImageSet {
    ids: Vec<String>,
    targets: Array2<f64>,
    source: Source,
    profile: ArchProfile,
    cache: Vec<Option<Array3<f32>>>,
    cache_left: usize,
}

impl ImageSet {
    /// Images are decoded on first use.
    pub fn from_split(split: &DatasetSplit, profile: &ArchProfile) -> Self {
        let n = split.len();
        let c = split.vocabulary.len();
        let mut targets = Array2::zeros((n, c));
        for (mut row, r) in targets.axis_iter_mut(Axis(0)).zip(&split.records) {
            for (dst, t) in row.iter_mut().zip(&r.target) {
                *dst = *t as f64;
            }
        }
        Self {
            ids: split.records.iter().map(|r| r.image_id.clone()).collect(),
            targets,
            source: Source::Files(split.records.iter().map(|r| r.path.clone()).collect()),
            profile: profile.clone(),
            cache: vec![None; n],
            cache_left: DEFAULT_CACHE_BYTES,
        }
    }

    /// Like [`from_split`](Self::from_split), leaving out records whose
    /// file is absent. Returns the skipped ids.
    pub fn from_split_present(split: &DatasetSplit, profile: &ArchProfile) -> (Self, Vec<String>) {
        let (present, missing): (Vec<_>, Vec<_>) =
            split.records.iter().cloned().partition(|r| r.path.is_file());
        let kept = DatasetSplit {
            records: present,
            ..split.clone()
        };
        (
            Self::from_split(&kept, profile),
            missing.into_iter().map(|r| r.image_id).collect(),
        )
    }

    /// Already-standardized tensors, each (3, size, size).
    pub fn from_tensors(
        ids: Vec<String>,
        images: Vec<Array3<f32>>,
        targets: Array2<f64>,
        profile: &ArchProfile,
    ) -> Result<Self> {
        let s = profile.input_size;
        if images.len() != ids.len() || targets.nrows() != ids.len() {
            return Err(Error::InvalidArgument("ids, images and targets differ in length".into()));
        }
        if let Some(bad) = images.iter().position(|im| im.dim() != (3, s, s)) {
            return Err(Error::InvalidArgument(format!(
                "image {} has shape {:?}, expected (3, {s}, {s})",
                ids[bad],
                images[bad].dim()
            )));
        }
        Ok(Self {
            ids,
            targets,
            source: Source::Memory,
            profile: profile.clone(),
            cache: images.into_iter().map(Some).collect(),
            cache_left: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn targets(&self) -> &Array2<f64> {
        &self.targets
    }

    pub fn num_classes(&self) -> usize {
        self.targets.ncols()
    }

    pub fn profile(&self) -> &ArchProfile {
        &self.profile
    }

    pub fn image(&mut self, i: usize) -> Result<Array3<f32>> {
        if let Some(img) = &self.cache[i] {
            return Ok(img.clone());
        }
        let Source::Files(paths) = &self.source else {
            unreachable!("in-memory sets hold every image");
        };
        let img = load_and_standardize(&paths[i], &self.profile).map_err(|e| match e {
            Error::Io { path, source } => Error::Io {
                path: PathBuf::from(format!("{} (image {})", path.display(), self.ids[i])),
                source,
            },
            other => other,
        })?;
        let bytes = img.len() * std::mem::size_of::<f32>();
        if bytes <= self.cache_left {
            self.cache_left -= bytes;
            self.cache[i] = Some(img.clone());
        }
        Ok(img)
    }

    /// Stacks the given samples. With `augment`, sample `i` is augmented
    /// with the seed `seed_of(i)`.
    pub fn batch(
        &mut self,
        indices: &[usize],
        augment: Option<(&Augmentation, &dyn Fn(usize) -> u64)>,
    ) -> Result<(Array4<f32>, Array2<f64>)> {
        let s = self.profile.input_size;
        let mut x = Array4::zeros((indices.len(), 3, s, s));
        let mut y = Array2::zeros((indices.len(), self.num_classes()));
        for (k, &i) in indices.iter().enumerate() {
            let img = self.image(i)?;
            let img = match augment {
                Some((aug, seed_of)) => aug.apply(&img, seed_of(i), Policy::Train),
                None => img,
            };
            x.index_axis_mut(Axis(0), k).assign(&img);
            y.row_mut(k).assign(&self.targets.row(i));
        }
        Ok((x, y))
    }
}
