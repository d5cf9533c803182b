//! Seed derivation for reproducible, order-independent random streams.
//!
//! Every replicate (and every simulation rep) gets its own ChaCha stream
//! whose seed is a pure function of a master seed and an index path. The
//! derivation is a splitmix64 chain, so replicate k's draws never depend
//! on how many workers ran or in which order replicates were scheduled.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; a cheap, well-mixed 64-bit permutation.
#[inline]
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a master seed and an index path.
///
/// `derive_seed(m, &[a, b])` differs from `derive_seed(m, &[b, a])` and from
/// `derive_seed(m, &[a])`; paths act as domain separators.
pub(crate) fn derive_seed(master: u64, path: &[u64]) -> u64 {
    let mut acc = mix64(master ^ 0x6761_6f66_6368_6563); // constant salt
    for (depth, &part) in path.iter().enumerate() {
        acc = mix64(acc ^ mix64(part.wrapping_add(depth as u64 + 1)));
    }
    acc
}

/// A ChaCha8 generator seeded from `(master, path)`.
pub(crate) fn rng_from(master: u64, path: &[u64]) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    let mut s = derive_seed(master, path);
    for chunk in seed.chunks_exact_mut(8) {
        s = mix64(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}
