//! Seeded noise streams.
//!
//! Every Monte Carlo replication draws from its own ChaCha8 stream keyed by
//! `(master seed, replication index)`. ChaCha is counter based, so the draws
//! for replication `r` are fixed no matter which thread runs it or in what
//! order replications are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream index reserved for auxiliary draws (e.g. sampled simplex points)
/// so they never collide with a replication stream.
pub const AUXILIARY_STREAM: u64 = u64::MAX;

/// Generator for replication `index` under `seed`.
pub fn replication_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Generator for auxiliary draws that are not tied to a replication.
pub fn auxiliary_rng(seed: u64) -> ChaCha8Rng {
    replication_rng(seed, AUXILIARY_STREAM)
}
