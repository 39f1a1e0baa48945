//! Deterministic RNG streams keyed by a master seed and task indices, so a
//! replicate draws the same numbers whatever thread runs it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream for `(seed, path...)`.
pub fn stream(seed: u64, path: &[u64]) -> ChaCha8Rng {
    let mut h = splitmix64(seed);
    for &p in path {
        h = splitmix64(h ^ splitmix64(p.wrapping_add(0x632B_E59B_D9B4_E019)));
    }
    ChaCha8Rng::seed_from_u64(h)
}

/// Stream domains, so e.g. replicate 3 of the null fits and subsample 3 of
/// the bootstrap never share numbers.
pub mod domain {
    pub const NULL_RESPONSE: u64 = 1;
    pub const BOOTSTRAP: u64 = 2;
    pub const GENOTYPES: u64 = 3;
    pub const CAUSAL: u64 = 4;
    pub const NOISE: u64 = 5;
    pub const STUDY: u64 = 6;
    pub const PATHWAYS: u64 = 7;
}
