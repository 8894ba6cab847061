//! Deterministic random streams.
//!
//! Every `(seed, realization, stream)` triple maps to its own ChaCha stream,
//! so Monte Carlo results do not depend on how realizations are scheduled
//! across worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Named stream offsets so independent consumers never share a stream.
pub mod purpose {
    pub const STATE: u64 = 1 << 40;
    pub const RECEIVER: u64 = 2 << 40;
    pub const PARAMETERS: u64 = 3 << 40;
    pub const CHANNEL: u64 = 4 << 40;
    pub const SENSOR_NOISE: u64 = 5 << 40;
    pub const ORACLE: u64 = 6 << 40;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent generator for one realization and one stream.
pub fn stream(seed: u64, realization: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(realization)));
    rng.set_stream(stream);
    rng
}
