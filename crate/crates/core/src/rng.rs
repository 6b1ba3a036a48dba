//! Reproducible random streams.
//!
//! Every Monte Carlo sample gets its own ChaCha stream selected by the
//! sample index, so results do not depend on how samples are distributed
//! over worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Bernoulli displacement sequence: 0 with probability `p`, else 1.
pub fn bernoulli_window(rng: &mut impl Rng, p: f64, len: usize) -> Vec<u8> {
    (0..len)
        .map(|_| if rng.gen::<f64>() < p { 0 } else { 1 })
        .collect()
}
