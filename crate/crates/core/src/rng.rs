//! Seed plumbing: stable hashing and named random substreams.
//!
//! Every random draw in the crate descends from one top-level seed. A named
//! substream ("split", "init", "simulate", ...) gets its own ChaCha key, and
//! per-record streams select a ChaCha stream id, so record `i` draws the same
//! numbers no matter how many records precede it or which worker runs it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Platform-independent 64-bit hash of `bytes` keyed by `seed`.
pub fn stable_hash(seed: u64, bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for b in seed.to_le_bytes().iter().chain(bytes) {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    mix64(h)
}

/// Maps a hash to the unit interval using its top 53 bits.
pub fn unit_interval(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Seed of the named substream of `seed`.
pub fn substream_seed(seed: u64, name: &str) -> u64 {
    stable_hash(seed, name.as_bytes())
}

/// Generator for the named substream.
pub fn substream(seed: u64, name: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(substream_seed(seed, name))
}

/// Counter-based generator for record `index` of the named substream.
pub fn record_stream(seed: u64, name: &str, index: u64) -> ChaCha8Rng {
    let mut rng = substream(seed, name);
    rng.set_stream(index);
    rng
}
