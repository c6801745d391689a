//! Counter-based uniform sampling on the sphere and order-fixed parallel sums.
//!
//! Sample `i` of stream `s` is read from a fixed window of the ChaCha8 key
//! stream for `(seed, s)`, so it does not depend on how the index range is
//! split across workers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bloch::BlochVector;

/// Indices per work item in the parallel reductions.
pub const CHUNK: usize = 4096;

/// 32-bit words of key stream consumed per sample (two `f64` draws).
const WORDS_PER_SAMPLE: u128 = 4;

/// Uniform points on the unit sphere, addressable by index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SphereStream {
    seed: u64,
    stream: u64,
}

impl SphereStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        SphereStream { seed, stream }
    }

    fn rng_at(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(index as u128 * WORDS_PER_SAMPLE);
        rng
    }

    /// The `index`-th sample.
    pub fn sample(&self, index: u64) -> BlochVector {
        let mut rng = self.rng_at(index);
        draw(&mut rng)
    }

    /// Samples `start..start + len`, identical to calling [`sample`](Self::sample) on each index.
    pub fn samples(&self, start: u64, len: usize) -> impl Iterator<Item = BlochVector> {
        let mut rng = self.rng_at(start);
        (0..len).map(move |_| draw(&mut rng))
    }
}

fn draw(rng: &mut ChaCha8Rng) -> BlochVector {
    let u: f64 = rng.random();
    let v: f64 = rng.random();
    let z = 2.0 * u - 1.0;
    let phi = std::f64::consts::TAU * v;
    let s = (1.0 - z * z).max(0.0).sqrt();
    BlochVector::new(s * phi.cos(), s * phi.sin(), z)
}

/// Sums `f(i)` for `i in 0..n` with a reduction order fixed by [`CHUNK`].
pub fn ordered_sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let partials: Vec<f64> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            (start..(start + CHUNK).min(n)).map(&f).sum::<f64>()
        })
        .collect();
    partials.iter().sum()
}

/// Processes `0..n` in [`CHUNK`]-sized ranges in parallel and returns the
/// per-chunk results in index order.
pub fn ordered_chunks<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(std::ops::Range<usize>) -> T + Sync,
{
    (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            f(start..(start + CHUNK).min(n))
        })
        .collect()
}
