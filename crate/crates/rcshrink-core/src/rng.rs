//! Deterministic noise streams.
//!
//! Every stream is keyed by (master seed, scenario, replication, tag), so
//! replications can be generated in any order — or concurrently — and still
//! produce bit-identical draws. Normal variates come from the inverse CDF,
//! which keeps streams identical across platforms (no rejection-sampling
//! state to diverge).

use crate::special::norm_quantile;
use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};

/// Stream tag for observation noise.
pub const TAG_NOISE: u64 = 1;
/// Stream tag for Monte Carlo risk-oracle draws.
pub const TAG_MONTE_CARLO: u64 = 2;

/// FNV-1a hash of a scenario label (e.g. `"bumps|512|1"`), used as the
/// scenario component of a stream key.
pub fn scenario_hash(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in label.as_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Counter-based generator producing standard-normal draws.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: ChaCha12Rng,
}

impl NoiseStream {
    /// Stream keyed by the full (master, scenario, replication, tag) tuple.
    pub fn new(master_seed: u64, scenario: u64, replication: u64, tag: u64) -> Self {
        let mut seed = [0u8; 32];
        seed[0..8].copy_from_slice(&master_seed.to_le_bytes());
        seed[8..16].copy_from_slice(&scenario.to_le_bytes());
        seed[16..24].copy_from_slice(&replication.to_le_bytes());
        seed[24..32].copy_from_slice(&tag.to_le_bytes());
        NoiseStream { rng: ChaCha12Rng::from_seed(seed) }
    }

    /// One standard-normal draw via the inverse CDF. The uniform is centered
    /// on the 2⁻⁵³ lattice, so every value is exact in f64 and strictly
    /// inside (0, 1) — the 64-bit lattice would round its endpoints to 1.
    pub fn standard_normal(&mut self) -> f64 {
        let u = ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0);
        norm_quantile(u)
    }

    /// A vector of n standard-normal draws.
    pub fn standard_normal_vec(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.standard_normal()).collect()
    }
}
