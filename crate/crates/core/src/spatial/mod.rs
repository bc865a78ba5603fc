//! Exact nearest-neighbor search and point sampling.

mod kdtree;
mod sampling;

pub use kdtree::{KnnIndex, NeighborTable};
pub use sampling::{farthest_point_sample, farthest_point_sample_from, random_sample, SampleSpec};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic generator for `(seed, stream)`; distinct streams of one
/// seed are independent.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[inline]
pub(crate) fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}
