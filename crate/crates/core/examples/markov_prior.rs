//! Compares the chain KL of a mask posterior against the Markov prior with
//! exact enumeration, and prints the prior's run-length survival.
//!
//! cargo run --example markov_prior

use prosody_core::salience::{prior_kl_bruteforce, prior_kl_chain, MarkovPrior};

fn main() -> prosody_core::Result<()> {
    let prior = MarkovPrior::default();
    for q in [vec![0.01; 6], vec![0.9; 6], vec![0.05, 0.1, 0.9, 0.95, 0.9, 0.1, 0.05], vec![0.5; 10]] {
        let chain = prior_kl_chain(&q, &prior);
        let exact = prior_kl_bruteforce(&q, &prior)?;
        println!("q={q:?}\n  chain {chain:.10}  enumeration {exact:.10}");
    }
    println!("run length  P(run >= k)");
    for k in [1, 5, 9, 10, 20] {
        println!("{k:>10}  {:.3}", prior.run_survival(k));
    }
    Ok(())
}
