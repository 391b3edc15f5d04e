//! Deterministic seed derivation for nested experiment components.
//!
//! Every randomized stage (splits, folds, hyperparameter draws, resampling,
//! random pairs) derives its own seed from the master seed plus a stream of
//! tags, so no stage's seed depends on whether some other stage ran.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; good avalanche for cheap seed mixing.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix a master seed with a stream of tags into a new seed.
pub fn mix(seed: u64, stream: &[u64]) -> u64 {
    let mut acc = splitmix64(seed);
    for &part in stream {
        acc = splitmix64(acc ^ splitmix64(part));
    }
    acc
}

/// Stable 64-bit hash of a name (FNV-1a).
pub fn hash_name(name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Seeded generator for a derived stream.
pub fn rng(seed: u64, stream: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed, stream))
}
