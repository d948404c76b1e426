//! Splittable, replayable random streams.
//!
//! Every stream is a ChaCha8 keystream: the 64-bit seed is expanded into the
//! 256-bit key with `SeedableRng::seed_from_u64`, and `stream_id` selects the
//! ChaCha stream (nonce). Draws are a pure function of
//! `(seed, stream_id, position)`, so runs replay bit-for-bit and distinct
//! stream ids never overlap.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

/// Creates the stream `(seed, stream_id)` positioned at its first draw.
pub fn rng_stream(seed: u64, stream_id: u64) -> RngStream {
    RngStream::new(seed, stream_id)
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform draw in `[lo, hi)`; returns `lo` when the interval is empty.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        if hi > lo {
            lo + (hi - lo) * self.uniform()
        } else {
            lo
        }
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// Uniform index in `0..n`. Panics if `n == 0`.
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    /// `k` distinct indices from `0..n`, none equal to `exclude`.
    pub fn distinct_indices(&mut self, n: usize, k: usize, exclude: Option<usize>) -> Vec<usize> {
        let available = n - usize::from(exclude.is_some_and(|e| e < n));
        assert!(
            k <= available,
            "cannot draw {k} distinct indices from {available}"
        );
        let mut picked = Vec::with_capacity(k);
        while picked.len() < k {
            let c = self.index(n);
            if Some(c) != exclude && !picked.contains(&c) {
                picked.push(c);
            }
        }
        picked
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
