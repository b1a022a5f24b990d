//! Binary-concrete (two-class Gumbel-softmax) sampling.

use rand::Rng as _;

use super::prior::clamp_prob;
use crate::seed::{rng_from, Rng};

fn standard_gumbel(rng: &mut Rng) -> f64 {
    // u in (0, 1]; 1 - gen() avoids ln(0)
    let u = 1.0 - rng.gen::<f64>();
    -(-u.ln()).ln()
}

/// One draw of `g1 - g0` with `g_i` i.i.d. standard Gumbel.
pub fn logistic_noise(rng: &mut Rng) -> f64 {
    let g1 = standard_gumbel(rng);
    let g0 = standard_gumbel(rng);
    g1 - g0
}

/// Noise for `len` frames from a dedicated seed.
pub fn noise_sequence(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from(seed);
    (0..len).map(|_| logistic_noise(&mut rng)).collect()
}

/// `sigma((logit(q) + noise) / temperature)`.
pub fn binary_concrete(q: f64, temperature: f64, noise: f64) -> f64 {
    let q = clamp_prob(q);
    let z = ((q / (1.0 - q)).ln() + noise) / temperature;
    1.0 / (1.0 + (-z).exp())
}

/// Returns `(soft, hard)`; `hard = round(soft)`.
pub fn gumbel_softmax_sample(q: f64, temperature: f64, rng: &mut Rng) -> (f64, f64) {
    assert!(temperature > 0.0, "temperature must be positive");
    let soft = binary_concrete(q, temperature, logistic_noise(rng));
    (soft, soft.round())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn near_one_is_almost_always_on() {
        let mut rng = rng_from(3);
        let on = (0..10_000).filter(|_| gumbel_softmax_sample(1.0 - 1e-6, 0.5, &mut rng).1 == 1.0).count();
        assert!(on as f64 / 10_000.0 >= 0.999);
    }

    #[test]
    fn hard_mean_tracks_q() {
        let mut rng = rng_from(11);
        let n = 100_000;
        let on: f64 = (0..n).map(|_| gumbel_softmax_sample(0.3, 0.1, &mut rng).1).sum();
        assert!((on / n as f64 - 0.3).abs() < 0.02);
    }

    #[test]
    fn fixed_seed_repeats() {
        let a = gumbel_softmax_sample(0.4, 0.7, &mut rng_from(9));
        let b = gumbel_softmax_sample(0.4, 0.7, &mut rng_from(9));
        assert_eq!(a, b);
        assert_eq!(noise_sequence(5, 2), noise_sequence(5, 2));
    }
}
