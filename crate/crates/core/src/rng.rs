//! Seed and stream derivation.
//!
//! Every random quantity is drawn from a ChaCha8 generator keyed by the user
//! seed mixed with a per-campaign tag. Trial `i` reads from stream `i` of that
//! key, so a trial's draws depend only on `(seed, tag, i)` and never on which
//! worker ran it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TrialRng = ChaCha8Rng;

/// Seed used when neither a flag nor the environment supplies one.
pub const DEFAULT_SEED: u64 = 20_240_601;

/// SplitMix64 finaliser; a bijection on `u64`.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable 64-bit tag for a campaign name (FNV-1a).
pub fn tag(name: &str) -> u64 {
    name.bytes().fold(0xCBF2_9CE4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Generator for trial `index` of the campaign `tag` under `seed`.
pub fn trial_rng(seed: u64, tag: u64, index: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed ^ mix(tag)));
    rng.set_stream(index);
    rng
}

/// Generator for a one-off draw that is not part of a trial sequence.
pub fn single_rng(seed: u64, tag: u64) -> TrialRng {
    trial_rng(seed, tag, u64::MAX)
}
