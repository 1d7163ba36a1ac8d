//! Seedable, stream-splittable random source.
//!
//! Every stochastic operation in the crate takes an explicit generator. Streams
//! derived from the same base seed are statistically independent, so drops and
//! Monte Carlo workers can run in parallel while the overall output stays a
//! pure function of `(config, seed)`.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Returns an independent stream identified by `(seed, stream_id)`.
pub fn stream(seed: u64, stream_id: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}
