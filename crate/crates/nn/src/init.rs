//! Weight initializers. All take an explicit generator so construction is
//! reproducible from a seed.

use ndarray::ArrayD;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// `(fan_in, fan_out)` of an `[out, in, ...]` weight.
pub fn fans(shape: &[usize]) -> (usize, usize) {
    let receptive: usize = shape.iter().skip(2).product();
    let fan_in = shape.get(1).copied().unwrap_or(1) * receptive;
    let fan_out = shape[0] * receptive;
    (fan_in, fan_out)
}

/// He normal initialization scaled by fan-out, for ReLU networks.
pub fn kaiming_normal_fan_out(value: &mut ArrayD<f32>, rng: &mut ChaCha8Rng) {
    let (_, fan_out) = fans(value.shape());
    normal(value, (2.0 / fan_out as f32).sqrt(), rng);
}

/// Zero-mean normal with the given standard deviation.
pub fn normal(value: &mut ArrayD<f32>, std: f32, rng: &mut ChaCha8Rng) {
    let normal = Normal::new(0.0f32, std).unwrap();
    value.mapv_inplace(|_| normal.sample(rng));
}

/// Uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
pub fn uniform_fan_in(value: &mut ArrayD<f32>, fan_in: usize, rng: &mut ChaCha8Rng) {
    let bound = 1.0 / (fan_in as f32).sqrt();
    value.mapv_inplace(|_| rng.random_range(-bound..bound));
}

/// Fan-in uniform for a `[out, in, ...]` weight.
pub fn uniform_weight(value: &mut ArrayD<f32>, rng: &mut ChaCha8Rng) {
    let (fan_in, _) = fans(value.shape());
    uniform_fan_in(value, fan_in, rng);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn kaiming_std_matches_fan_out() {
        let mut w = ArrayD::<f32>::zeros(ndarray::IxDyn(&[64, 16, 3, 3]));
        kaiming_normal_fan_out(&mut w, &mut ChaCha8Rng::seed_from_u64(1));
        let n = w.len() as f32;
        let var = w.iter().map(|v| v * v).sum::<f32>() / n;
        let expected = 2.0 / (64.0 * 9.0);
        assert!((var / expected - 1.0).abs() < 0.1, "{var} vs {expected}");
    }

    #[test]
    fn uniform_respects_bound() {
        let mut w = ArrayD::<f32>::zeros(ndarray::IxDyn(&[10, 25]));
        uniform_weight(&mut w, &mut ChaCha8Rng::seed_from_u64(2));
        assert!(w.iter().all(|v| v.abs() <= 0.2));
    }
}
