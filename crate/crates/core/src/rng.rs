//! Seeded, splittable randomness.
//!
//! Every random quantity in the crate is drawn from a [`RandomSource`]. Work
//! that runs in parallel derives child sources by index with
//! [`RandomSource::fork`], so results never depend on the number of worker
//! threads or on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Number of independent trials simulated from a single derived stream in
/// [`par_chunked_sum`].
pub const CHUNK: u64 = 4096;

/// A reproducible stream of random numbers identified by `(seed, stream)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomSource {
    pub seed: u64,
    pub stream: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Instantiates the generator. Identical `(seed, stream)` pairs always
    /// produce identical output.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// Derives an independent child source. Children of distinct parents or
    /// distinct indices do not share streams.
    pub fn fork(&self, index: u64) -> RandomSource {
        let seed = splitmix64(self.seed ^ splitmix64(self.stream.wrapping_add(0xA076_1D64_78BD_642F)));
        RandomSource { seed, stream: index }
    }
}

/// Runs `total` independent trials split into fixed chunks of [`CHUNK`], each
/// chunk drawing from `source.fork(chunk_index)`, and sums the per-chunk
/// results. The partition does not depend on the thread pool, so the sum is
/// reproducible for any `--threads` setting.
pub fn par_chunked_sum<F>(total: u64, source: RandomSource, f: F) -> u64
where
    F: Fn(&mut ChaCha8Rng, u64) -> u64 + Sync,
{
    let chunks = total.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = CHUNK.min(total - c * CHUNK);
            let mut rng = source.fork(c).rng();
            f(&mut rng, count)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_seed_and_stream_repeat() {
        let a: Vec<u64> = {
            let mut r = RandomSource::with_stream(7, 3).rng();
            (0..16).map(|_| r.gen()).collect()
        };
        let b: Vec<u64> = {
            let mut r = RandomSource::with_stream(7, 3).rng();
            (0..16).map(|_| r.gen()).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn streams_and_forks_differ() {
        let first = |s: RandomSource| -> u64 { s.rng().gen() };
        let base = RandomSource::new(1);
        assert_ne!(first(base), first(RandomSource::with_stream(1, 1)));
        assert_ne!(first(base.fork(0)), first(base.fork(1)));
        assert_ne!(first(base.fork(0).fork(0)), first(base.fork(0)));
    }

    #[test]
    fn chunked_sum_is_thread_independent() {
        let src = RandomSource::new(99);
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    par_chunked_sum(10_000, src, |rng, n| (0..n).filter(|_| rng.gen_bool(0.3)).count() as u64)
                })
        };
        assert_eq!(run(1), run(3));
    }
}
