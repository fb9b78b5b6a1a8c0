use cxrlens_nn::io::{from_bytes, to_bytes};
use cxrlens_nn::{
    AdaptiveAvgPool2d, Adam, AdamConfig, Conv2d, Conv2dConfig, Flatten, Linear, Network, Pass, Relu,
};
use ndarray::{Array4, ArrayD, IxDyn};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random(shape: &[usize], seed: u64) -> ArrayD<f32> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    ArrayD::from_shape_fn(IxDyn(shape), |_| r.random_range(-1.0f32..1.0))
}

fn toy(channels: usize, classes: usize, seed: u64) -> Network {
    let mut conv = Conv2d::new(Conv2dConfig::new(2, channels, 3).padding(1).with_bias(true));
    conv.weight.value = random(conv.weight.shape(), seed);
    let mut fc = Linear::new(channels, classes);
    fc.weight.value = random(fc.weight.shape(), seed + 1);
    let mut net = Network::new();
    net.push("conv", conv);
    net.push("relu", Relu::new());
    net.push("pool", AdaptiveAvgPool2d::new(1, 1));
    net.push("flatten", Flatten::new());
    net.push("fc", fc);
    net
}

fn block_state(net: &Network, idx: usize) -> Vec<ArrayD<f32>> {
    let mut out = Vec::new();
    net.visit_block(idx, &mut |_, s| out.push(s.tensor().clone()));
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn safetensors_round_trip_is_exact(
        shapes in prop::collection::vec(prop::collection::vec(1usize..5, 1..4), 1..5),
        seed in any::<u64>(),
    ) {
        let tensors: Vec<(String, ArrayD<f32>)> = shapes
            .iter()
            .enumerate()
            .map(|(i, s)| (format!("block{i}.weight"), random(s, seed ^ i as u64)))
            .collect();
        let back = from_bytes(&to_bytes(&tensors).unwrap()).unwrap();
        prop_assert_eq!(back.len(), tensors.len());
        for (name, t) in &tensors {
            prop_assert_eq!(&back[name], t);
        }
    }

    #[test]
    fn frozen_blocks_never_move(
        freeze_conv in any::<bool>(),
        channels in 1usize..5,
        seed in 0u64..1000,
    ) {
        let mut net = toy(channels, 3, seed);
        net.set_trainable(0, !freeze_conv);
        net.set_trainable(4, true);
        let before = block_state(&net, 0);
        let head = block_state(&net, 4);
        let x = Array4::from_shape_vec((2, 2, 5, 5), random(&[2 * 2 * 5 * 5], seed + 7).into_raw_vec_and_offset().0).unwrap();
        let mut adam = Adam::new(AdamConfig::default());
        for step in 0..3 {
            let from = net.first_trainable().unwrap();
            let pass = Pass { train: true, record_from: Some(from), capture: None, seed: step };
            let out = net.forward(&x, &pass).output;
            net.zero_grad();
            net.backward(Array4::ones(out.dim()), from, false, true);
            adam.step(&mut net, 0.01);
        }
        prop_assert_eq!(block_state(&net, 0) == before, freeze_conv);
        prop_assert_ne!(block_state(&net, 4), head);
    }

    #[test]
    fn identity_kernel_passes_input_through(c in 1usize..4, h in 1usize..7, w in 1usize..7, seed in any::<u64>()) {
        let mut conv = Conv2d::new(Conv2dConfig::new(c, c, 1));
        conv.weight.value.fill(0.0);
        for k in 0..c {
            conv.weight.value[[k, k, 0, 0]] = 1.0;
        }
        let mut net = Network::new();
        net.push("conv", conv);
        let x = Array4::from_shape_vec((1, c, h, w), random(&[c * h * w], seed).into_raw_vec_and_offset().0).unwrap();
        prop_assert_eq!(net.forward(&x, &Pass::inference()).output, x);
    }

    #[test]
    fn average_pool_of_a_constant_is_that_constant(v in -10.0f32..10.0, h in 1usize..9, w in 1usize..9) {
        let mut net = Network::new();
        net.push("pool", AdaptiveAvgPool2d::new(1, 1));
        let out = net.forward(&Array4::from_elem((2, 3, h, w), v), &Pass::inference()).output;
        prop_assert_eq!(out.dim(), (2, 3, 1, 1));
        for o in out.iter() {
            prop_assert!((o - v).abs() <= 1e-5 * v.abs().max(1.0));
        }
    }
}
