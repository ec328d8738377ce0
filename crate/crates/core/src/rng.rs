//! Reproducible random streams.
//!
//! Every random draw in the crate comes from a xoshiro256++ generator whose
//! state is derived from a user seed and a stream index through SplitMix64.
//! Work units (frames, realizations, subsets) each own a stream, so results do
//! not depend on scheduling.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

/// Name recorded in output metadata.
pub const RNG_ALGORITHM: &str = "xoshiro256++/splitmix64-streams";

pub type StreamRng = Xoshiro256PlusPlus;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a tag/index pair.
pub fn derive_seed(seed: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(tag)).wrapping_add(index))
}

/// Generator for stream `index` of `seed`.
pub fn stream(seed: u64, index: u64) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(seed, 0x5354_5245_414d, index))
}
