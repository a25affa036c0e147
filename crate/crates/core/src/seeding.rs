//! Deterministic seeding for reproducible experiments.
//!
//! All randomness in the crate flows through counter-seeded ChaCha
//! generators. Derived seeds are produced by hashing the base seed together
//! with structural indices (replication number, restart number, ...), so
//! every unit of work draws from its own stream regardless of scheduling
//! order. That is what makes parallel runs reproduce serial ones byte for
//! byte.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One round of the SplitMix64 output function; a cheap, well-mixed hash.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a base seed with a sequence of context words (indices, tags) into
/// a derived seed. Deterministic and order-sensitive.
pub fn derive_seed(base: u64, context: &[u64]) -> u64 {
    let mut state = splitmix64(base ^ 0x6A09_E667_F3BC_C909);
    for &word in context {
        state = splitmix64(state ^ word);
    }
    state
}

/// A generator for the given seed.
pub fn rng_for_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derived_seeds_are_stable_and_distinct() {
        let a = derive_seed(7, &[1, 2, 3]);
        let b = derive_seed(7, &[1, 2, 3]);
        assert_eq!(a, b);
        assert_ne!(a, derive_seed(7, &[1, 3, 2]), "order must matter");
        assert_ne!(a, derive_seed(8, &[1, 2, 3]), "base seed must matter");
    }

    #[test]
    fn rng_streams_reproduce() {
        let mut r1 = rng_for_seed(42);
        let mut r2 = rng_for_seed(42);
        for _ in 0..16 {
            assert_eq!(r1.random::<u64>(), r2.random::<u64>());
        }
    }
}
