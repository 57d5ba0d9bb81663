//! Deterministic random source shared by the decision engine and the simulator.
//!
//! A [`RandomSource`] is created from a 64-bit seed and always yields the same
//! stream for the same seed. The seed is expanded with SplitMix64 into a full
//! ChaCha8 key, and uniforms are built from the top 53 bits of each 64-bit
//! output, so the uniform stream does not depend on platform float quirks.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TWO_POW_NEG53: f64 = 1.0 / (1u64 << 53) as f64;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seeded pseudo-random stream. Identical seed, identical stream.
///
/// Cloning forks the stream: the clone continues from the same point as the
/// original but the two advance independently afterwards.
#[derive(Debug, Clone)]
pub struct RandomSource {
    rng: ChaCha8Rng,
    draws: u64,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        let mut state = seed;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        Self {
            rng: ChaCha8Rng::from_seed(key),
            draws: 0,
        }
    }

    /// Uniform real in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.draws += 1;
        (self.rng.next_u64() >> 11) as f64 * TWO_POW_NEG53
    }

    /// Gaussian sample via Box-Muller; consumes exactly two uniforms.
    /// `spread <= 0` degenerates to the mean.
    pub fn normal(&mut self, mean: f64, spread: f64) -> f64 {
        let u1 = 1.0 - self.uniform(); // (0, 1], keeps ln away from zero
        let u2 = self.uniform();
        if spread <= 0.0 {
            return mean;
        }
        let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
        mean + spread * z
    }

    /// Exponential sample with the given rate (events per unit time);
    /// consumes exactly one uniform.
    pub fn exponential(&mut self, rate: f64) -> f64 {
        let u = self.uniform();
        -(1.0 - u).ln() / rate
    }

    /// Uniform index in `[0, n)`. `n` must be nonzero.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        let u = self.uniform();
        ((u * n as f64) as usize).min(n - 1)
    }

    /// Number of uniforms consumed so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }
}
