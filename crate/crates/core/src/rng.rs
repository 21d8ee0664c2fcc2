//! Seeded, counter-based random streams.
//!
//! All randomness derives from a single `u64` seed plus a stream index, so
//! results do not depend on evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Sub-stream keyed by a label and an index, e.g. `("ransac", iteration)`.
pub fn keyed(seed: u64, label: &str, index: u64) -> ChaCha8Rng {
    // FNV-1a over the label keeps stream ids stable across builds.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ h);
    rng.set_stream(index);
    rng
}
