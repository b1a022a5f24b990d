//! Score-function gradient on a three-armed bandit: estimator vs. exact
//! gradient, baseline variance, and a REINFORCE learning curve.
//!
//! cargo run --example bandit

use prosody_core::rl::{reinforce_bandit_check, train_bandit, BANDIT_REWARDS};

fn main() -> prosody_core::Result<()> {
    let r = reinforce_bandit_check(0)?;
    println!("exact    {:?}", r.exact);
    println!("estimate {:?}", r.estimate);
    println!("2 SE     {:?}", r.standard_error.map(|s| 2.0 * s));
    println!("variance without baseline {:.4}, with E[r] {:.4}", r.variance_plain, r.variance_baseline);
    let trace = train_bandit(&BANDIT_REWARDS, 0.05, 2000, 1)?;
    for step in [0, 99, 249, 499, 999, 1999] {
        println!("step {:>4}: pi = {:.3?}", step + 1, trace[step]);
    }
    Ok(())
}
