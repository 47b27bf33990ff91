//! Seed fan-out.
//!
//! Every random stream in a run is derived from one master seed with a
//! counter: `derive(master, counter)` mixes the pair through SplitMix64, so any
//! sub-artifact can be regenerated from `(master, counter)` alone. Named
//! streams hash their name (FNV-1a) into the counter.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed number `counter` of the stream rooted at `master`.
pub fn derive(master: u64, counter: u64) -> u64 {
    splitmix64(master.wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Seed for a named stream, e.g. `derive_named(master, "gen/S03/walking")`.
pub fn derive_named(master: u64, name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    derive(master, h)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
