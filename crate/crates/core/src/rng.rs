//! Seeded random streams.
//!
//! All randomness flows from one user seed. Each consumer (`init`, `shuffle`,
//! `labels`, `sampling`, ...) gets its own named substream so that changing how
//! much one component draws never perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Seed of the substream `name` under `seed`.
pub fn substream_seed(seed: u64, name: &str) -> u64 {
    splitmix64(seed ^ fnv1a(name))
}

pub fn substream(seed: u64, name: &str) -> Rng {
    Rng::seed_from_u64(substream_seed(seed, name))
}
