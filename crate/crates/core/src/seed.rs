//! Named random sub-streams derived from one master seed.
//!
//! Every stochastic component (corpus, init, gumbel, action, eval) draws from
//! its own stream so that any one of them can be re-seeded without disturbing
//! the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn fnv1a(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStream {
    master: u64,
}

impl SeedStream {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// Seed for the named sub-stream.
    pub fn seed(&self, name: &str) -> u64 {
        splitmix64(self.master ^ splitmix64(fnv1a(name)))
    }

    /// Seed for the `index`-th member of a named family (per-utterance seeds).
    pub fn indexed(&self, name: &str, index: u64) -> u64 {
        splitmix64(self.seed(name) ^ splitmix64(index.wrapping_add(1)))
    }

    pub fn rng(&self, name: &str) -> Rng {
        Rng::seed_from_u64(self.seed(name))
    }

    pub fn child(&self, name: &str) -> SeedStream {
        SeedStream::new(self.seed(name))
    }
}

pub fn rng_from(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}
