//! Finite-difference check of a small network built on the autodiff tape.
//!
//! cargo run --example gradcheck

use prosody_core::grad::nn::{Gru, Linear};
use prosody_core::grad::{grad_check, grad_check_params, Graph, ParamStore, Tensor};
use prosody_core::seed::rng_from;

fn main() -> prosody_core::Result<()> {
    let x = Tensor::new(vec![2, 3], vec![0.3, -1.2, 0.8, 0.05, 0.4, -0.7])?;
    let err = grad_check(
        |g, v| {
            let s = g.log_softmax(v)?;
            let t = g.tanh(s)?;
            g.sum(t)
        },
        &x,
        1e-6,
    )?;
    println!("tanh(log_softmax(x)) max relative error {err:.2e}");

    let mut rng = rng_from(4);
    let mut store = ParamStore::<f64>::new();
    let gru = Gru::new(&mut store, "gru", 3, 4, &mut rng)?;
    let out = Linear::new(&mut store, "out", 4, 1, &mut rng)?;
    let seq = Tensor::new(vec![5, 3], (0..15).map(|i| (i as f64 * 0.37).sin()).collect())?;
    let f = |g: &mut Graph<f64>, s: &ParamStore<f64>| {
        let x = g.constant(seq.clone())?;
        let h = gru.forward(g, s, x)?;
        let y = out.forward(g, s, h)?;
        let y = g.sigmoid(y)?;
        g.mean(y)
    };
    let components: Vec<(usize, usize)> =
        (0..store.len()).flat_map(|p| (0..store.value(p).numel()).step_by(3).map(move |e| (p, e))).collect();
    let err = grad_check_params(f, &store, &components, 1e-6)?;
    println!("GRU + linear, {} parameters probed, max relative error {err:.2e}", components.len());
    Ok(())
}
