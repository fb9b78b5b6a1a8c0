use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::models::{FreezePolicy, ModelSpec};

fn vocab() -> LabelVocabulary {
    LabelVocabulary::new(["a", "b", "c"]).unwrap()
}

fn model(policy: FreezePolicy) -> ClassifierModel {
    let spec = ModelSpec::new(Arch::Alexnet, 3)
        .pretrained(false)
        .freeze(policy)
        .width_divisor(16)
        .input_size(63)
        .seed(3);
    ClassifierModel::build(&spec, None).unwrap()
}

fn data(n: usize, seed: u64) -> ImageSet {
    let m = model(FreezePolicy::None);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let images = (0..n)
        .map(|_| Array3::from_shape_fn((3, 63, 63), |_| rng.random_range(-1.0f32..1.0)))
        .collect();
    let targets = Array2::from_shape_fn((n, 3), |(i, c)| ((i + c) % 2) as f64);
    let ids = (0..n).map(|i| format!("img{i}")).collect();
    ImageSet::from_tensors(ids, images, targets, m.profile()).unwrap()
}

fn quick(epochs: usize) -> TrainConfig {
    TrainConfig {
        epochs,
        batch_train: 4,
        lr_step_epochs: 2,
        base_lr: 1e-3,
        seed: 11,
        ..TrainConfig::default()
    }
}

#[test]
fn bookkeeping_and_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = model(FreezePolicy::UpToBoundary);
    let cfg = quick(2);
    let h = train(&mut m, &mut data(8, 1), &vocab(), &cfg, &RunOutput::to_dir(dir.path())).unwrap();
    assert_eq!(h.len(), 2);
    assert_eq!(h.checkpoints.len(), 3);
    assert!(h.checkpoints[2].ends_with("checkpoints/final"));
    for (e, r) in h.records.iter().enumerate() {
        assert_eq!(r.epoch, e);
        assert_eq!(r.lr, lr_at(e, &cfg));
        assert_eq!(r.steps, 2);
        assert!(r.mean_train_loss.is_finite());
    }
    assert_eq!(read_history(&dir.path().join(HISTORY_FILE)).unwrap(), h.records);
    assert!(dir.path().join(LOSS_CURVE_FILE).is_file());
    let meta = Checkpoint::read_meta(&h.checkpoints[0]).unwrap();
    assert_eq!(meta.epoch, 1);
    assert_eq!(meta.config_hash, cfg.trajectory_hash());
}

#[test]
fn identical_seeds_give_identical_histories() {
    let run = || {
        let mut m = model(FreezePolicy::UpToBoundary);
        let h = train(&mut m, &mut data(8, 1), &vocab(), &quick(2), &RunOutput::default()).unwrap();
        (h.losses(), m.fingerprint())
    };
    assert_eq!(run(), run());
}

#[test]
fn resume_matches_an_uninterrupted_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut full = model(FreezePolicy::None);
    let all = train(&mut full, &mut data(8, 2), &vocab(), &quick(4), &RunOutput::default()).unwrap();

    let mut first = model(FreezePolicy::None);
    let out = RunOutput::to_dir(dir.path());
    let h = train(&mut first, &mut data(8, 2), &vocab(), &quick(2), &out).unwrap();
    let (resumed, h2) = resume(
        &h.checkpoints[1],
        &mut data(8, 2),
        &vocab(),
        &quick(4),
        Some(Arch::Alexnet),
        &RunOutput::default(),
    )
    .unwrap();
    assert_eq!(h2.records[2].lr, lr_at(2, &quick(4)));
    assert_eq!(h2.losses(), all.losses());
    assert_eq!(resumed.fingerprint(), full.fingerprint());
}

#[test]
fn resume_names_the_differing_field() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = model(FreezePolicy::UpToBoundary);
    let h = train(&mut m, &mut data(4, 3), &vocab(), &quick(1), &RunOutput::to_dir(dir.path())).unwrap();
    let ck = &h.checkpoints[0];
    let field = |r: Result<(ClassifierModel, TrainHistory)>| match r {
        Err(Error::CheckpointMismatch { field, .. }) => field,
        Err(e) => panic!("unexpected error {e}"),
        Ok(_) => panic!("resume should fail"),
    };
    let other = LabelVocabulary::new(["a", "b", "x"]).unwrap();
    let out = RunOutput::default();
    assert_eq!(field(resume(ck, &mut data(4, 3), &other, &quick(2), None, &out)), "vocabulary");
    let two = LabelVocabulary::new(["a", "b"]).unwrap();
    assert_eq!(field(resume(ck, &mut data(4, 3), &two, &quick(2), None, &out)), "num_classes");
    assert_eq!(
        field(resume(ck, &mut data(4, 3), &vocab(), &quick(2), Some(Arch::Resnet152), &out)),
        "arch"
    );
    let reseeded = TrainConfig { seed: 12, ..quick(2) };
    assert_eq!(
        field(resume(ck, &mut data(4, 3), &vocab(), &reseeded, None, &out)),
        "train_config.seed"
    );
}

#[test]
fn empty_split_is_rejected() {
    let mut m = model(FreezePolicy::UpToBoundary);
    let r = train(&mut m, &mut data(0, 1), &vocab(), &quick(1), &RunOutput::default());
    assert!(matches!(r, Err(Error::InvalidArgument(_))));
}

#[test]
fn non_finite_loss_reports_the_batch() {
    let mut m = model(FreezePolicy::UpToBoundary);
    m.network_mut().visit_mut(&mut |name, mut s| {
        if name == "classifier.6.bias" {
            s.tensor_mut().fill(f32::NAN);
        }
    });
    let cfg = TrainConfig { augment: false, ..quick(1) };
    match train(&mut m, &mut data(8, 1), &vocab(), &cfg, &RunOutput::default()) {
        Err(Error::NonFiniteLoss { epoch, step, ids }) => {
            assert_eq!((epoch, step), (0, 0));
            assert_eq!(ids.len(), 4);
        }
        other => panic!("expected a non-finite loss error, got {other:?}"),
    }
}

#[test]
fn frozen_blocks_do_not_move() {
    let mut m = model(FreezePolicy::Backbone);
    let head = m.network().index_of("classifier.6").unwrap();
    let before: Vec<String> = (0..head).map(|i| m.group_fingerprint(i)).collect();
    let head_before = m.group_fingerprint(head);
    train(&mut m, &mut data(8, 4), &vocab(), &quick(1), &RunOutput::default()).unwrap();
    let after: Vec<String> = (0..head).map(|i| m.group_fingerprint(i)).collect();
    assert_eq!(before, after);
    assert_ne!(head_before, m.group_fingerprint(head));
}

#[test]
fn fit_batch_reduces_loss() {
    let mut m = model(FreezePolicy::None);
    let mut d = data(4, 5);
    let (x, y) = d.batch(&[0, 1, 2, 3], None).unwrap();
    let losses = fit_batch(&mut m, &x, &y, &quick(1), 30).unwrap();
    assert!(losses[29] < losses[0], "{losses:?}");
}
