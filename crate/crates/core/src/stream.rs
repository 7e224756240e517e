//! Deterministic per-trajectory RNG streams.
//!
//! ChaCha8 exposes 2^64 independent streams over a single seed via the
//! stream counter, so `(master_seed, index)` pairs map to statistically
//! independent generators and replay is exact for a fixed pair.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The RNG handed to every simulation and estimator in this crate.
pub type Stream = ChaCha8Rng;

/// Derive the RNG stream for one trajectory (or one pipeline stage) from the
/// experiment master seed. Distinct indices give independent streams.
pub fn seed_stream(master_seed: u64, index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}
