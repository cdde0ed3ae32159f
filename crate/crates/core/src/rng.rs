//! Counter-based random streams.
//!
//! Every random quantity in a run is drawn from a short-lived generator
//! keyed by `(seed, stream, index)`, so the value of any draw depends only on
//! its key and never on how many other draws happened before it.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type StreamRng = Xoshiro256PlusPlus;

/// Stream identifiers. Mode channels occupy 0..4.
pub mod streams {
    pub const MODE_A: u64 = 0;
    pub const MODE_B: u64 = 1;
    pub const MODE_BETA1: u64 = 2;
    pub const MODE_BETA2: u64 = 3;
    pub const PUSH: u64 = 0x5055_5348;
    pub const SPIN_INIT: u64 = 0x5350_494e;
    pub const ENSEMBLE: u64 = 0x454e_5345;
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
pub fn stream_seed(seed: u64, stream: u64, index: u64) -> u64 {
    mix64(mix64(seed ^ mix64(stream)) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

#[inline]
pub fn stream_rng(seed: u64, stream: u64, index: u64) -> StreamRng {
    StreamRng::seed_from_u64(stream_seed(seed, stream, index))
}
