//! Seeded random streams.
//!
//! Every randomized operation takes its own stream derived from the master
//! seed and a stream index (candidate or attempt number), so results do not
//! depend on evaluation order or thread count.

use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

/// Independent stream `index` of the generator seeded by `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Sub-stream for a second randomized phase sharing the same index space.
pub fn substream(seed: u64, phase: u64, index: u64) -> ChaCha8Rng {
    stream(seed ^ phase.wrapping_mul(0x9E37_79B9_7F4A_7C15), index)
}
