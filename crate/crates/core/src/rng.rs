//! Counter-based random streams.
//!
//! A stream is addressed by a seed and a path of counters (for example
//! `[beam, iteration, candidate]`). The address is hashed into a ChaCha key,
//! so draws depend only on the address and never on evaluation order.

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

/// splitmix64 finalizer.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a seed and a counter path into a 64-bit key.
pub fn derive_key(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix(seed), |h, &c| mix(h ^ mix(c)))
}

/// Independent generator for `(seed, path)`.
pub fn stream(seed: u64, path: &[u64]) -> ChaCha8Rng {
    let k0 = derive_key(seed, path);
    let mut key = [0u8; 32];
    for (i, chunk) in key.chunks_mut(8).enumerate() {
        chunk.copy_from_slice(&mix(k0 ^ (i as u64).wrapping_mul(0xA24B_AED4_963E_E407)).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Stream labels so unrelated generators never share an address.
pub mod domain {
    pub const CITY: u64 = 1;
    pub const QUERIES: u64 = 2;
    pub const PRIOR: u64 = 3;
    pub const CORRUPT: u64 = 4;
    pub const REFINE: u64 = 5;
}
