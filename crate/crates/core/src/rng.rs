//! Deterministic random-number substreams.
//!
//! Every random quantity derives from one master seed. A work unit
//! identified by a path such as `(stage, b, r)` gets its own ChaCha stream,
//! so results do not depend on scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// RNG for the work unit at `path` under `seed`.
pub fn substream(seed: u64, path: &[u64]) -> StreamRng {
    let stream = path
        .iter()
        .fold(0x5EED_u64, |acc, &p| splitmix64(acc ^ splitmix64(p)));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stage tags keeping the streams of different procedures apart.
pub mod stage {
    pub const BOOTSTRAP_POPULATION: u64 = 1;
    pub const BOOTSTRAP_SAMPLE: u64 = 2;
    pub const SIM_PILOT: u64 = 3;
    pub const SIM_ITERATION: u64 = 4;
    pub const SIM_CALIBRATION: u64 = 5;
    pub const DESIGN_ITERATION: u64 = 6;
}
