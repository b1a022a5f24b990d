//! Three-armed bandit check of the score-function gradient estimator.

use crate::error::Result;
use crate::grad::{Graph, ParamStore, Tensor};
use crate::rl::policy::sample_categorical;
use crate::seed::{rng_from, SeedStream};

pub const BANDIT_REWARDS: [f64; 3] = [1.0, 0.0, -1.0];

fn softmax(logits: &[f64; 3]) -> [f64; 3] {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e = logits.map(|l| (l - m).exp());
    let z: f64 = e.iter().sum();
    e.map(|v| v / z)
}

/// `d E[r] / d logits = pi * (r - E[r])`, by enumeration over arms.
pub fn bandit_exact_gradient(logits: &[f64; 3], rewards: &[f64; 3]) -> [f64; 3] {
    let p = softmax(logits);
    let mean: f64 = p.iter().zip(rewards).map(|(p, r)| p * r).sum();
    [0, 1, 2].map(|i| p[i] * (rewards[i] - mean))
}

/// `(r_a - b) * grad log pi(a)` through the autodiff tape.
fn score_gradient(logits: &[f64; 3], arm: usize, weight: f64) -> Result<[f64; 3]> {
    let mut store = ParamStore::new();
    let idx = store.add("logits", Tensor::new(vec![1, 3], logits.to_vec())?)?;
    let mut g = Graph::<f64>::new();
    let theta = g.param(&store, idx)?;
    let lp = g.log_softmax(theta)?;
    let mut pick = vec![0.0; 3];
    pick[arm] = 1.0;
    let pick = g.constant(Tensor::new(vec![1, 3], pick)?)?;
    let chosen = g.mul(lp, pick)?;
    let chosen = g.sum(chosen)?;
    let obj = g.scale(chosen, weight)?;
    let grads = g.backward(obj)?.params(&store);
    let d = grads.get(0).data();
    Ok([d[0], d[1], d[2]])
}

/// `n` single-sample estimates with a constant baseline.
pub fn bandit_sample_gradients(logits: &[f64; 3], rewards: &[f64; 3], baseline: f64, n: usize, seed: u64) -> Result<Vec<[f64; 3]>> {
    let p = softmax(logits);
    let mut rng = rng_from(seed);
    (0..n)
        .map(|_| {
            let arm = sample_categorical(&p, &mut rng);
            score_gradient(logits, arm, rewards[arm] - baseline)
        })
        .collect()
}

/// Plain REINFORCE ascent from uniform logits; returns the probability of
/// each arm after every step.
pub fn train_bandit(rewards: &[f64; 3], lr: f64, steps: usize, seed: u64) -> Result<Vec<[f64; 3]>> {
    let mut logits = [0.0; 3];
    let mut rng = rng_from(seed);
    let mut trace = Vec::with_capacity(steps);
    for _ in 0..steps {
        let arm = sample_categorical(&softmax(&logits), &mut rng);
        let grad = score_gradient(&logits, arm, rewards[arm])?;
        for (l, d) in logits.iter_mut().zip(grad) {
            *l += lr * d;
        }
        trace.push(softmax(&logits));
    }
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BanditReport {
    pub exact: [f64; 3],
    pub estimate: [f64; 3],
    pub standard_error: [f64; 3],
    /// Summed per-component sample variance without and with `b = E[r]`,
    /// measured at logits `[-2, 0, 0]`.
    pub variance_plain: f64,
    pub variance_baseline: f64,
    pub best_arm_prob: f64,
    pub steps: usize,
}

impl BanditReport {
    pub fn estimator_ok(&self) -> bool {
        (0..3).all(|i| (self.estimate[i] - self.exact[i]).abs() <= 2.0 * self.standard_error[i])
    }

    pub fn baseline_ok(&self) -> bool {
        self.variance_baseline < self.variance_plain
    }

    pub fn training_ok(&self) -> bool {
        self.best_arm_prob >= 0.95
    }

    pub fn passed(&self) -> bool {
        self.estimator_ok() && self.baseline_ok() && self.training_ok()
    }
}

fn mean_and_var(samples: &[[f64; 3]]) -> ([f64; 3], [f64; 3]) {
    let n = samples.len() as f64;
    let mean = [0, 1, 2].map(|i| samples.iter().map(|s| s[i]).sum::<f64>() / n);
    let var = [0, 1, 2].map(|i| samples.iter().map(|s| (s[i] - mean[i]).powi(2)).sum::<f64>() / (n - 1.0));
    (mean, var)
}

/// Estimator at the uniform policy from 10^4 samples, baseline variance
/// comparison, then 2000 REINFORCE steps at lr 0.05.
pub fn reinforce_bandit_check(seed: u64) -> Result<BanditReport> {
    let seeds = SeedStream::new(seed).child("bandit");
    let logits = [0.0; 3];
    let n = 10_000;
    let exact = bandit_exact_gradient(&logits, &BANDIT_REWARDS);
    let plain = bandit_sample_gradients(&logits, &BANDIT_REWARDS, 0.0, n, seeds.seed("plain"))?;
    let (estimate, var_plain) = mean_and_var(&plain);
    // E[r] = 0 under the uniform policy, so compare baselines where the best
    // arm is rare. b = E[r] is not variance-reducing everywhere: at logits
    // [1, 0, -1] it roughly doubles the variance.
    let skewed = [-2.0, 0.0, 0.0];
    let expected: f64 = softmax(&skewed).iter().zip(&BANDIT_REWARDS).map(|(p, r)| p * r).sum();
    let unbased = bandit_sample_gradients(&skewed, &BANDIT_REWARDS, 0.0, n, seeds.seed("skewed"))?;
    let based = bandit_sample_gradients(&skewed, &BANDIT_REWARDS, expected, n, seeds.seed("skewed"))?;
    let (_, var_unbased) = mean_and_var(&unbased);
    let (_, var_based) = mean_and_var(&based);
    let steps = 2000;
    let trace = train_bandit(&BANDIT_REWARDS, 0.05, steps, seeds.seed("train"))?;
    Ok(BanditReport {
        exact,
        estimate,
        standard_error: var_plain.map(|v| (v / n as f64).sqrt()),
        variance_plain: var_unbased.iter().sum(),
        variance_baseline: var_based.iter().sum(),
        best_arm_prob: trace.last().map_or(0.0, |p| p[0]),
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_gradient_uniform() {
        let g = bandit_exact_gradient(&[0.0; 3], &BANDIT_REWARDS);
        let want = [1.0 / 3.0, 0.0, -1.0 / 3.0];
        for i in 0..3 {
            assert!((g[i] - want[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn degenerate_policy_has_zero_gradient() {
        let g = bandit_exact_gradient(&[800.0, 0.0, 0.0], &BANDIT_REWARDS);
        assert!(g.iter().all(|v| v.abs() < 1e-12));
        let samples = bandit_sample_gradients(&[800.0, 0.0, 0.0], &BANDIT_REWARDS, 0.0, 100, 1).unwrap();
        assert!(samples.iter().flatten().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn tape_matches_closed_form() {
        // grad log softmax(theta)[a] = e_a - pi
        let logits = [0.3, -0.2, 0.5];
        let p = softmax(&logits);
        let g = score_gradient(&logits, 2, 1.0).unwrap();
        for i in 0..3 {
            let want = if i == 2 { 1.0 } else { 0.0 } - p[i];
            assert!((g[i] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn check_passes() {
        let r = reinforce_bandit_check(0).unwrap();
        assert!(r.estimator_ok(), "{r:?}");
        assert!(r.baseline_ok(), "{r:?}");
        assert!(r.training_ok(), "{r:?}");
    }
}
