//! Hard binary-concrete samples approach Bernoulli(q) as the temperature drops.
//!
//! cargo run --example gumbel_sampling

use prosody_core::salience::gumbel_softmax_sample;
use prosody_core::seed::rng_from;

fn main() {
    let n = 100_000;
    println!("   q   temp  mean_hard  mean_soft");
    for temp in [1.0, 0.3, 0.1] {
        for q in [0.1, 0.3, 0.5, 0.9] {
            let mut rng = rng_from(11);
            let (mut hard, mut soft) = (0.0, 0.0);
            for _ in 0..n {
                let (s, h) = gumbel_softmax_sample(q, temp, &mut rng);
                hard += h;
                soft += s;
            }
            println!("{q:>4} {temp:>6} {:>10.4} {:>10.4}", hard / n as f64, soft / n as f64);
        }
    }
}
