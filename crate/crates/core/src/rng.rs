//! Seeded random streams.
//!
//! Every random quantity is drawn from a ChaCha8 stream addressed by
//! `(master seed, trial index, stream index)`. The trial index is folded
//! into the 64-bit seed by a SplitMix64 finalizer, and the stream index
//! selects one of ChaCha's 2^64 independent streams via `set_stream`, so
//! any two distinct addresses give non-overlapping sequences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub use rand_chacha::ChaCha8Rng as StreamRng;

/// Human-readable statement of the splitting rule, recorded in manifests.
pub const SPLITTING_RULE: &str = "ChaCha8Rng::seed_from_u64(splitmix64(master ^ splitmix64(trial + 0x9E3779B97F4A7C15))) then set_stream(stream)";

/// Stream indices used across the crate.
pub mod streams {
    pub const MATRIX: u64 = 1;
    pub const INPUTS: u64 = 2;
    pub const STATE_EVOLUTION: u64 = 3;
    pub const SIGNAL: u64 = 4;
    pub const PROBE: u64 = 5;
    pub const NETWORK: u64 = 6;
    /// Second population of a two-sided (rectangular) state evolution.
    pub const STATE_EVOLUTION_AUX: u64 = 7;
}

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for trial `trial` under master seed `master`.
#[inline]
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    splitmix64(master ^ splitmix64(trial.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

/// The generator for `(master, trial, stream)`.
pub fn stream_rng(master: u64, trial: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(master, trial));
    rng.set_stream(stream);
    rng
}

/// Generator for a sampler called with a single seed.
pub fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[inline]
pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

#[inline]
pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}

#[inline]
pub fn rademacher<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

#[inline]
pub fn bernoulli<R: Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    rng.random::<f64>() < p
}

pub fn fill_normal<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    for x in out {
        *x = rng.sample(StandardNormal);
    }
}

/// Uniform random permutation of `0..n` (Fisher–Yates).
pub fn permutation<R: Rng + ?Sized>(rng: &mut R, n: usize) -> alloc::vec::Vec<usize> {
    let mut p: alloc::vec::Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        p.swap(i, j);
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn same_address_same_stream() {
        let mut a = stream_rng(7, 3, streams::MATRIX);
        let mut b = stream_rng(7, 3, streams::MATRIX);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn distinct_addresses_differ() {
        let first = |m, t, s| stream_rng(m, t, s).next_u64();
        let base = first(7, 3, 1);
        assert_ne!(base, first(7, 4, 1));
        assert_ne!(base, first(8, 3, 1));
        assert_ne!(base, first(7, 3, 2));
    }

    #[test]
    fn permutation_is_bijection() {
        let mut rng = seeded(1, 0);
        let mut p = permutation(&mut rng, 50);
        p.sort_unstable();
        assert!(p.iter().enumerate().all(|(i, &v)| i == v));
    }
}
