use cxrlens::models::{ClassifierModel, ModelSpec};
use cxrlens::profile::Arch;
use cxrlens::synthetic::{shape_vocabulary, shapes_dataset, Shape};
use cxrlens::trainer::{lr_at, train, RunOutput, TrainConfig};
use proptest::prelude::*;

const CLASSES: [Shape; 3] = [Shape::Disk, Shape::Square, Shape::Triangle];

fn tiny_alexnet() -> ClassifierModel {
    let spec = ModelSpec::new(Arch::Alexnet, 3).pretrained(false).width_divisor(16).input_size(63);
    ClassifierModel::build(&spec, None).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn logged_rates_follow_the_schedule(
        epochs in 1usize..12,
        base in prop::sample::select(vec![1e-2, 3e-3, 1e-3, 1e-4]),
        step in 1usize..5,
        factor in prop::sample::select(vec![0.1, 0.5, 0.3]),
        seed in 0u64..100,
    ) {
        let mut model = tiny_alexnet();
        let vocab = shape_vocabulary(&CLASSES).unwrap();
        let mut data = shapes_dataset(6, &CLASSES, model.profile(), seed).unwrap();
        let cfg = TrainConfig {
            epochs,
            batch_train: 4,
            base_lr: base,
            lr_step_epochs: step,
            lr_factor: factor,
            seed,
            ..TrainConfig::default()
        };
        let history = train(&mut model, &mut data, &vocab, &cfg, &RunOutput::default()).unwrap();
        prop_assert_eq!(history.len(), epochs);
        for (e, r) in history.records.iter().enumerate() {
            prop_assert_eq!(r.epoch, e);
            prop_assert_eq!(r.lr, lr_at(e, &cfg));
            prop_assert!(r.mean_train_loss.is_finite());
        }
    }
}

#[test]
fn loss_falls_on_a_separable_three_class_set() {
    let spec = ModelSpec::new(Arch::Resnet152, 3).pretrained(false).width_divisor(8).input_size(64);
    let mut model = ClassifierModel::build(&spec, None).unwrap();
    let vocab = shape_vocabulary(&CLASSES).unwrap();
    let mut data = shapes_dataset(200, &CLASSES, model.profile(), 11).unwrap();
    let cfg = TrainConfig {
        epochs: 10,
        seed: 11,
        ..TrainConfig::default()
    };
    let history = train(&mut model, &mut data, &vocab, &cfg, &RunOutput::default()).unwrap();
    let losses = history.losses();
    assert!(losses[9] < losses[0], "{losses:?}");
}
