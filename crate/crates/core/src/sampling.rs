//! Reproducible random states.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fields::StateVector;
use crate::scalar::Real;

/// Draws `ρ, p` log-uniformly from `[0.1, 10]` and `u` uniformly from
/// `[−5, 5]`.
#[derive(Clone, Debug)]
pub struct StateSampler {
    rng: ChaCha8Rng,
    pub seed: u64,
}

impl StateSampler {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed), seed }
    }

    pub fn state<T: Real>(&mut self) -> StateVector<T> {
        let ln10 = 10f64.ln();
        let rho = (self.rng.gen_range(-ln10..ln10)).exp();
        let p = (self.rng.gen_range(-ln10..ln10)).exp();
        let u = self.rng.gen_range(-5.0..5.0);
        StateVector { rho: T::lit(rho), p: T::lit(p), u: T::lit(u) }
    }

    pub fn states<T: Real>(&mut self, n: usize) -> Vec<StateVector<T>> {
        (0..n).map(|_| self.state()).collect()
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }
}

/// `n` states from a fresh sampler seeded with `seed`.
pub fn sample_states<T: Real>(seed: u64, n: usize) -> Vec<StateVector<T>> {
    StateSampler::new(seed).states(n)
}
