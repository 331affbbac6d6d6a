//! Seed derivation. Every random draw comes from a ChaCha stream addressed by
//! `(seed, counter)`, so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Streams used by the simulator, kept apart so adding draws to one role
/// never shifts another.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Role {
    MonteCarlo = 1,
    Listing = 2,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for trial `trial` in role `role` of an experiment seeded with `base`.
pub fn trial_seed(base: u64, trial: u64, role: Role) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ trial) ^ role as u64)
}

/// The generator for iteration `i` under `seed`: stream `i` of the ChaCha
/// keyed by `seed`.
pub fn stream(seed: u64, i: u64) -> ChaCha8Rng {
    substream(&ChaCha8Rng::seed_from_u64(seed), i)
}

/// Stream `i` of an already keyed generator.
pub fn substream(keyed: &ChaCha8Rng, i: u64) -> ChaCha8Rng {
    let mut rng = keyed.clone();
    rng.set_stream(i);
    rng.set_word_pos(0);
    rng
}
