//! Seeding contract.
//!
//! Every random quantity in the crate is drawn from ChaCha8 keyed by a
//! 64-bit seed through `SeedableRng::seed_from_u64`. Independent substreams
//! are selected with the ChaCha stream word, so the numbers produced for
//! substream `i` depend only on `(seed, i)` and never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Identity string recorded in output metadata.
pub const GENERATOR: &str = "ChaCha8Rng(seed_from_u64, stream=substream index), rand_chacha 0.9";

pub type Rng = ChaCha8Rng;

/// Generator for the primary stream of `seed`.
pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for substream `stream` of `seed`. Substream 0 is the primary stream.
pub fn substream(seed: u64, stream: u64) -> Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Derive a child seed from a parent seed and a coordinate tuple (SplitMix64 finaliser).
pub fn derive_seed(seed: u64, coords: &[u64]) -> u64 {
    let mut h = seed ^ 0x9E37_79B9_7F4A_7C15;
    for &c in coords {
        h = splitmix(h ^ splitmix(c.wrapping_add(0xD1B5_4A32_D192_ED03)));
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
