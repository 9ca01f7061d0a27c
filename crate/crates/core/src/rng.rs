//! Counter-based random streams.
//!
//! Every replicate owns a ChaCha8 stream keyed by the run seed; the stream id
//! is `(namespace << 32) | replicate` and the word position is the draw
//! index, so a draw never depends on which worker produced it.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::special::normal_quantile;

/// Random source for one replicate.
#[derive(Debug, Clone)]
pub struct ReplicateRng {
    inner: ChaCha8Rng,
}

const TWO_POW_M53: f64 = 1.0 / (1u64 << 53) as f64;

impl ReplicateRng {
    pub fn new(seed: u64, namespace: u32, replicate: u32) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        let mut inner = ChaCha8Rng::from_seed(key);
        inner.set_stream(((namespace as u64) << 32) | replicate as u64);
        ReplicateRng { inner }
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) as f64 + 0.5) * TWO_POW_M53
    }

    /// Standard normal by inversion.
    pub fn normal(&mut self) -> f64 {
        normal_quantile(self.uniform())
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for x in out {
            *x = self.normal();
        }
    }

    /// Uniform integer in `0..bound`.
    pub fn below(&mut self, bound: usize) -> usize {
        ((self.uniform() * bound as f64) as usize).min(bound - 1)
    }
}
