//! Seeded random number generation.
//!
//! All stochastic routines in this crate draw from ChaCha8 seeded with a
//! 64-bit integer, so identical arguments reproduce bit-identical output on
//! every platform. Normal variates come from `rand_distr::StandardNormal`
//! (ziggurat method).

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn standard_normal(rng: &mut SeededRng) -> f64 {
    rng.sample(StandardNormal)
}

/// Uniform size-`k` subset of `{0, .., n-1}`, returned sorted ascending.
pub fn sample_support(rng: &mut SeededRng, n: usize, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = sample(rng, n, k).into_iter().collect();
    idx.sort_unstable();
    idx
}
