//! Per-path Gaussian noise derived from `(master_seed, path_index, stream)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const STREAM_VALUE: u64 = 0;
pub const STREAM_ORDER_FLOW: u64 = 1;
pub const STREAM_INITIAL: u64 = 2;
const STREAMS_PER_PATH: u64 = 4;

/// Generator for one stream of one path. Independent of how paths are scheduled.
pub fn path_rng(master_seed: u64, path_index: usize, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(path_index as u64 * STREAMS_PER_PATH + stream);
    rng
}

/// Brownian increments `√Δ_n · N(0,1)`.
pub fn fill_increments(rng: &mut ChaCha8Rng, dt: &[f64], out: &mut [f64]) {
    for (o, d) in out.iter_mut().zip(dt) {
        let z: f64 = rng.sample(StandardNormal);
        *o = d.sqrt() * z;
    }
}

pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}
