//! Seeding and random streams.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] seeded through
//! `SeedableRng::seed_from_u64`. ChaCha is a counter-based stream cipher, so a
//! given seed yields the same stream on every platform. Gaussian variates use
//! the ziggurat transform behind [`rand_distr::StandardNormal`].
//!
//! Seeds for derived streams (one per disorder realization, one per start
//! value, ...) come from [`mix_seed`], a SplitMix64 finalizer folded over the
//! coordinates of the cell.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a base seed and a list of integer coordinates.
///
/// `h_0 = splitmix64(base)`, `h_{k+1} = splitmix64(h_k ^ c_k)`. The result is
/// order-sensitive, so `(a, b)` and `(b, a)` give different streams.
pub fn mix_seed(base: u64, coords: &[u64]) -> u64 {
    coords.iter().fold(splitmix64(base), |h, &c| splitmix64(h ^ c))
}

pub fn stream(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}
