//! Named random substreams derived from one root seed.
//!
//! Every consumer of randomness (shuffling, initialization, dropout, negative
//! sampling) asks for its own stream keyed by a path of labels, so results do
//! not depend on the order in which parallel jobs run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Derives a child seed from `seed` and a label path.
pub fn derive_seed(seed: u64, path: &[&str]) -> u64 {
    path.iter().fold(splitmix64(seed), |acc, label| {
        splitmix64(acc ^ fnv1a(label.as_bytes()))
    })
}

pub fn substream(seed: u64, path: &[&str]) -> Rng {
    Rng::seed_from_u64(derive_seed(seed, path))
}

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}
