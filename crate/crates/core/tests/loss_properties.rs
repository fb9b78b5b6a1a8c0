use cxrlens::losses::{
    bce_elem, bce_with_logits, bce_with_logits_grad, focal_elem, focal_loss, focal_loss_grad, FocalLossConfig,
    Reduction,
};
use ndarray::Array2;
use proptest::prelude::*;

fn instance(b: usize, c: usize) -> impl Strategy<Value = (Array2<f64>, Array2<f64>)> {
    (
        prop::collection::vec(-8.0f64..8.0, b * c),
        prop::collection::vec(prop::bool::ANY, b * c),
    )
        .prop_map(move |(z, y)| {
            (
                Array2::from_shape_vec((b, c), z).unwrap(),
                Array2::from_shape_vec((b, c), y.into_iter().map(|t| t as u8 as f64).collect()).unwrap(),
            )
        })
}

fn shaped() -> impl Strategy<Value = (Array2<f64>, Array2<f64>)> {
    (1usize..6, 1usize..15).prop_flat_map(|(b, c)| instance(b, c))
}

/// Relative error with a floor: central differences of an f64 loss carry
/// roughly 1e-12 of rounding noise, so tinier gradients compare absolutely.
fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-6)
}

proptest! {
    #[test]
    fn mean_times_count_is_sum((z, y) in shaped(), alpha in 0.05f64..1.0, gamma in 0.0f64..4.0) {
        let n = z.len() as f64;
        let mean = bce_with_logits(z.view(), y.view(), Reduction::Mean).unwrap().scalar();
        let sum = bce_with_logits(z.view(), y.view(), Reduction::Sum).unwrap().scalar();
        prop_assert!((mean * n - sum).abs() <= 1e-12 * sum.abs().max(1.0));
        let cfg = FocalLossConfig::new(alpha, gamma);
        let mean = focal_loss(z.view(), y.view(), &cfg).unwrap().scalar();
        let sum = focal_loss(z.view(), y.view(), &cfg.with_reduction(Reduction::Sum)).unwrap().scalar();
        prop_assert!((mean * n - sum).abs() <= 1e-12 * sum.abs().max(1.0));
    }

    #[test]
    fn focal_never_exceeds_bce_at_unit_alpha(z in -30.0f64..30.0, y in prop::bool::ANY, gamma in 0.0f64..5.0) {
        let y = y as u8 as f64;
        prop_assert!(focal_elem(z, y, &FocalLossConfig::new(1.0, gamma)) <= bce_elem(z, y));
    }

    #[test]
    fn focal_decreases_in_the_logit_for_positives(
        mut grid in prop::collection::vec(-15.0f64..15.0, 2..30),
        alpha in 0.05f64..1.0,
        gamma in 0.0f64..4.0,
    ) {
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let cfg = FocalLossConfig::new(alpha, gamma);
        for w in grid.windows(2) {
            prop_assert!(focal_elem(w[1], 1.0, &cfg) < focal_elem(w[0], 1.0, &cfg), "{w:?}");
        }
    }

    #[test]
    fn bce_is_symmetric(z in -50.0f64..50.0, y in prop::bool::ANY) {
        let y = y as u8 as f64;
        prop_assert_eq!(bce_elem(z, y), bce_elem(-z, 1.0 - y));
    }

    #[test]
    fn gradients_match_central_differences(
        (z, y) in instance(4, 14),
        alpha in 0.05f64..1.0,
        gamma in prop::sample::select(vec![0.0, 0.5, 1.0, 2.0, 3.0]),
    ) {
        let h = 1e-4;
        let cfg = FocalLossConfig::new(alpha, gamma);
        let bce = |m: &Array2<f64>| bce_with_logits(m.view(), y.view(), Reduction::Mean).unwrap().scalar();
        let focal = |m: &Array2<f64>| focal_loss(m.view(), y.view(), &cfg).unwrap().scalar();
        let gb = bce_with_logits_grad(z.view(), y.view(), Reduction::Mean).unwrap();
        let gf = focal_loss_grad(z.view(), y.view(), &cfg).unwrap();
        for idx in [(0, 0), (1, 5), (2, 9), (3, 13)] {
            let (mut up, mut down) = (z.clone(), z.clone());
            up[idx] += h;
            down[idx] -= h;
            let nb = (bce(&up) - bce(&down)) / (2.0 * h);
            let nf = (focal(&up) - focal(&down)) / (2.0 * h);
            prop_assert!(rel_err(gb[idx], nb) < 1e-4, "bce {idx:?}: {} vs {nb}", gb[idx]);
            prop_assert!(rel_err(gf[idx], nf) < 1e-4, "focal {idx:?}: {} vs {nf}", gf[idx]);
        }
    }
}
