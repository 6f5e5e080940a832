//! Seeded sampling of algebra vectors, dual vectors and group elements.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{AlgVec, DualVec};
use crate::group::{GroupElement, GroupModel};

pub const DEFAULT_SEED: u64 = 42;

pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent stream derived from `seed` and a label.
    pub fn stream(seed: u64, label: &str) -> Self {
        let h = label
            .bytes()
            .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
        Self::new(seed ^ h)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }

    pub fn coords(&mut self, n: usize, scale: f64) -> Vec<f64> {
        (0..n).map(|_| self.rng.gen_range(-scale..scale)).collect()
    }

    pub fn alg(&mut self, n: usize, scale: f64) -> AlgVec {
        AlgVec::new(self.coords(n, scale))
    }

    pub fn dual(&mut self, n: usize, scale: f64) -> DualVec {
        DualVec::new(self.coords(n, scale))
    }

    /// `exp` of a random algebra vector with entries in `[-1, 1]`.
    pub fn element(&mut self, model: &GroupModel) -> GroupElement {
        let xi = self.alg(model.dim(), 1.0);
        model.translate(&xi, &model.identity())
    }
}
