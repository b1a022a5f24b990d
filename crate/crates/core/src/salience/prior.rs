//! Markov mask prior, mean-field KL terms and the sparsity penalty.

use crate::error::{Error, Result};
use crate::grad::{Graph, Real, Var};

/// Posterior values are clamped to `[CLAMP, 1 - CLAMP]` before any KL.
pub const CLAMP: f64 = 1e-6;

/// Longest sequence [`prior_kl_bruteforce`] will enumerate.
pub const BRUTEFORCE_MAX_LEN: usize = 16;

pub fn clamp_prob(q: f64) -> f64 {
    q.clamp(CLAMP, 1.0 - CLAMP)
}

/// First-order chain over binary mask variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovPrior {
    /// P(M_t = M_{t-1}).
    pub p_stay: f64,
    /// P(M_1 = 1).
    pub p_init: f64,
}

impl Default for MarkovPrior {
    fn default() -> Self {
        Self { p_stay: 0.93, p_init: 0.01 }
    }
}

impl MarkovPrior {
    pub fn new(p_stay: f64, p_init: f64) -> Result<Self> {
        let prior = Self { p_stay, p_init };
        prior.validate()?;
        Ok(prior)
    }

    pub fn validate(&self) -> Result<()> {
        for v in [self.p_stay, self.p_init] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::OutOfRange { value: v, lo: 0.0, hi: 1.0 });
            }
        }
        Ok(())
    }

    /// P(M_t = cur | M_{t-1} = prev).
    pub fn transition(&self, prev: bool, cur: bool) -> f64 {
        if prev == cur {
            self.p_stay
        } else {
            1.0 - self.p_stay
        }
    }

    /// Log-probability of a whole binary sequence.
    pub fn log_prob(&self, mask: &[bool]) -> f64 {
        let Some(&first) = mask.first() else { return 0.0 };
        let mut lp = if first { self.p_init.ln() } else { (1.0 - self.p_init).ln() };
        for w in mask.windows(2) {
            lp += self.transition(w[0], w[1]).ln();
        }
        lp
    }

    /// Probability that a run, once started, survives at least `k` more
    /// transitions: `p_stay^k`.
    pub fn run_survival(&self, k: u32) -> f64 {
        self.p_stay.powi(k as i32)
    }
}

/// KL(Ber(q) || Ber(p)) in nats, both arguments clamped.
pub fn kl_bernoulli(q: f64, p: f64) -> f64 {
    let (q, p) = (clamp_prob(q), clamp_prob(p));
    q * (q / p).ln() + (1.0 - q) * ((1.0 - q) / (1.0 - p)).ln()
}

/// Sum over frames of KL(q_t || Ber(target)).
pub fn sparsity_loss(q: &[f64], target: f64) -> f64 {
    q.iter().map(|&qt| kl_bernoulli(qt, target)).sum()
}

/// KL between the factorized posterior and the Markov chain prior, one pass:
/// KL(q_1 || p_init) + sum_t [(1 - q_{t-1}) KL(q_t || 1 - p) + q_{t-1} KL(q_t || p)].
pub fn prior_kl_chain(q: &[f64], prior: &MarkovPrior) -> f64 {
    let Some(&q1) = q.first() else { return 0.0 };
    let mut kl = kl_bernoulli(q1, prior.p_init);
    for w in q.windows(2) {
        let prev = clamp_prob(w[0]);
        kl += (1.0 - prev) * kl_bernoulli(w[1], 1.0 - prior.p_stay) + prev * kl_bernoulli(w[1], prior.p_stay);
    }
    kl
}

/// Exact KL by enumerating all `2^T` masks.
pub fn prior_kl_bruteforce(q: &[f64], prior: &MarkovPrior) -> Result<f64> {
    let t = q.len();
    if t > BRUTEFORCE_MAX_LEN {
        return Err(Error::TooLong(t));
    }
    let q: Vec<f64> = q.iter().map(|&v| clamp_prob(v)).collect();
    let mut mask = vec![false; t];
    let mut kl = 0.0;
    for bits in 0u32..(1 << t) {
        let mut log_q = 0.0;
        for (i, m) in mask.iter_mut().enumerate() {
            *m = bits >> i & 1 == 1;
            log_q += if *m { q[i].ln() } else { (1.0 - q[i]).ln() };
        }
        kl += log_q.exp() * (log_q - prior.log_prob(&mask));
    }
    Ok(kl)
}

/// Per-element KL(q || Ber(p)) for a graph tensor of probabilities.
pub fn kl_bernoulli_graph<T: Real>(g: &mut Graph<T>, q: Var, p: f64) -> Result<Var> {
    let p = clamp_prob(p);
    // q ln q + (1 - q) ln(1 - q) - q ln p - (1 - q) ln(1 - p)
    let one_minus = g.affine(q, -1.0, 1.0)?;
    let lq = g.log(q)?;
    let l1q = g.log(one_minus)?;
    let a = g.mul(q, lq)?;
    let b = g.mul(one_minus, l1q)?;
    let neg_entropy = g.add(a, b)?;
    let cross = g.affine(q, (1.0 - p).ln() - p.ln(), -(1.0 - p).ln())?;
    g.add(neg_entropy, cross)
}

pub fn sparsity_loss_graph<T: Real>(g: &mut Graph<T>, q: Var, target: f64) -> Result<Var> {
    let kl = kl_bernoulli_graph(g, q, target)?;
    g.sum(kl)
}

/// Graph form of [`prior_kl_chain`]; `q` is `[T, 1]` and already clamped.
pub fn prior_kl_chain_graph<T: Real>(g: &mut Graph<T>, q: Var, prior: &MarkovPrior) -> Result<Var> {
    let t = g.shape(q)[0];
    let first = g.slice(q, 0, 1)?;
    let head = kl_bernoulli_graph(g, first, prior.p_init)?;
    let head = g.sum(head)?;
    if t == 1 {
        return Ok(head);
    }
    let cur = g.slice(q, 1, t)?;
    let prev = g.slice(q, 0, t - 1)?;
    let switch = kl_bernoulli_graph(g, cur, 1.0 - prior.p_stay)?;
    let stay = kl_bernoulli_graph(g, cur, prior.p_stay)?;
    // (1 - prev) switch + prev stay = switch + prev (stay - switch)
    let diff = g.sub(stay, switch)?;
    let weighted = g.mul(prev, diff)?;
    let terms = g.add(switch, weighted)?;
    let rest = g.sum(terms)?;
    g.add(head, rest)
}
