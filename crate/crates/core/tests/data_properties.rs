use std::collections::{BTreeSet, HashSet};

use cxrlens::dataset::{build_splits, make_subset, subset_size, DatasetSplit, LabelVocabulary, SampleRecord, SplitName};
use cxrlens::loader::ImageSet;
use cxrlens::preprocess::{destandardize, flip_horizontal, standardize, Augmentation, Policy};
use cxrlens::profile::{Arch, ArchProfile, IMAGENET_MEAN, IMAGENET_STD};
use image::RgbImage;
use ndarray::{Array2, Array3};
use proptest::prelude::*;

fn label_set(vocab: &LabelVocabulary, mask: u16) -> BTreeSet<String> {
    (0..vocab.len())
        .filter(|i| mask >> i & 1 == 1)
        .map(|i| vocab.classes()[i].clone())
        .collect()
}

fn records(vocab: &LabelVocabulary, masks: &[u16]) -> Vec<SampleRecord> {
    masks
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let labels = label_set(vocab, m);
            SampleRecord {
                image_id: format!("{i:05}.png"),
                path: format!("img/{i:05}.png").into(),
                target: vocab.encode(&labels).unwrap(),
                labels,
            }
        })
        .collect()
}

proptest! {
    #[test]
    fn encoding_round_trips(mask in 0u16..1 << 14) {
        let vocab = LabelVocabulary::nih();
        let labels = label_set(&vocab, mask);
        let target = vocab.encode(&labels).unwrap();
        prop_assert_eq!(target.len(), 14);
        prop_assert_eq!(target.iter().map(|t| *t as usize).sum::<usize>(), labels.len());
        prop_assert_eq!(vocab.decode(&target), labels);
    }

    #[test]
    fn splits_partition_the_listed_records(
        masks in prop::collection::vec(0u16..1 << 14, 1..60),
        assignment in prop::collection::vec(0u8..3, 60),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let vocab = LabelVocabulary::nih();
        let recs = records(&vocab, &masks);
        let (mut tr, mut te) = (String::new(), String::new());
        for (r, a) in recs.iter().zip(&assignment) {
            match a {
                0 => tr += &format!("{}\n", r.image_id),
                1 => te += &format!("{}\n", r.image_id),
                _ => {}
            }
        }
        let (tp, ep) = (dir.path().join("tr.txt"), dir.path().join("te.txt"));
        std::fs::write(&tp, tr).unwrap();
        std::fs::write(&ep, te).unwrap();
        let (train, test, report) = build_splits(recs.clone(), &vocab, &tp, &ep).unwrap();
        let listed = assignment[..recs.len()].iter().filter(|a| **a < 2).count();
        prop_assert_eq!(train.len() + test.len(), listed);
        prop_assert_eq!(report.unlisted, recs.len() - listed);
        let ids: HashSet<&str> = train.records.iter().map(|r| r.image_id.as_str()).collect();
        prop_assert!(test.records.iter().all(|r| !ids.contains(r.image_id.as_str())));
    }

    #[test]
    fn subsets_are_pure_and_sized(
        masks in prop::collection::vec(0u16..1 << 14, 1..200),
        fraction in 0.05f64..=1.0,
        seed in any::<u64>(),
    ) {
        let vocab = LabelVocabulary::nih();
        let split = DatasetSplit {
            name: SplitName::Train,
            vocabulary: vocab.clone(),
            source_list: None,
            records: records(&vocab, &masks),
        };
        prop_assume!(fraction * masks.len() as f64 >= 1.0);
        let a = make_subset(&split, fraction, seed).unwrap();
        prop_assert_eq!(&a, &make_subset(&split, fraction, seed).unwrap());
        prop_assert_eq!(a.len(), subset_size(split.len(), fraction));
        prop_assert_eq!(&a.vocabulary, &split.vocabulary);
        let parent: HashSet<(&str, &[u8])> =
            split.records.iter().map(|r| (r.image_id.as_str(), r.target.as_slice())).collect();
        prop_assert!(a.records.iter().all(|r| parent.contains(&(r.image_id.as_str(), r.target.as_slice()))));
        let need = (1.0 / fraction - 1e-9).ceil() as usize;
        for (c, (&full, &kept)) in split.class_counts().iter().zip(&a.class_counts()).enumerate() {
            prop_assert!(full == 0 || full < need || kept > 0, "class {c}: {full} -> {kept}");
        }
    }

    #[test]
    fn standardization_inverts(w in 1u32..12, h in 1u32..12, seed in any::<u32>()) {
        let img = RgbImage::from_fn(w, h, |x, y| {
            let v = seed.wrapping_mul(2654435761).wrapping_add(x * 7919 + y * 104729);
            image::Rgb([(v % 256) as u8, (v / 256 % 256) as u8, (v / 65536 % 256) as u8])
        });
        let back = destandardize(&standardize(&img, IMAGENET_MEAN, IMAGENET_STD), IMAGENET_MEAN, IMAGENET_STD);
        for (x, y, px) in img.enumerate_pixels() {
            for c in 0..3 {
                let err = (back[[c, y as usize, x as usize]] / 255.0 - px[c] as f32 / 255.0).abs();
                prop_assert!(err <= 1e-6, "{}", err);
            }
        }
    }

    #[test]
    fn augmentation_keeps_shape_and_labels(size in 8usize..40, seed in any::<u64>(), flip in 0.0f64..=1.0) {
        let profile = ArchProfile::new(Arch::Resnet152).with_input_size(size);
        let image = Array3::from_shape_fn((3, size, size), |(c, y, x)| (c + 2 * y + 3 * x) as f32 / 100.0);
        let targets = Array2::from_shape_vec((1, 3), vec![1.0, 0.0, 1.0]).unwrap();
        let mut set = ImageSet::from_tensors(vec!["a".into()], vec![image.clone()], targets.clone(), &profile).unwrap();
        let aug = Augmentation { flip_probability: flip, ..Augmentation::default() };
        let seed_of = move |_: usize| seed;
        let (x, y) = set.batch(&[0], Some((&aug, &seed_of))).unwrap();
        prop_assert_eq!(x.dim(), (1, 3, size, size));
        prop_assert_eq!(y, targets);
        prop_assert_eq!(aug.apply(&image, seed, Policy::Eval), image.clone());
        prop_assert_eq!(aug.apply(&image, seed, Policy::Train).dim(), image.dim());
        prop_assert_eq!(flip_horizontal(&flip_horizontal(&image)), image);
    }
}
