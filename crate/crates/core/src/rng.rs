//! Seeded, replication-indexed random streams.
//!
//! Every stream is a ChaCha8 generator. The 256-bit key is four successive
//! SplitMix64 outputs (little-endian) starting from the state
//! `master_seed + substream * 0x9E3779B97F4A7C15` (wrapping), and the
//! 64-bit ChaCha stream id is the replication index. Uniform `f64` draws take
//! the top 53 bits of a `u64` output and scale by `2^-53`.
//!
//! The algorithm is pinned so that an implementation in another language can
//! reproduce any replication bit for bit.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Well-known substream indices used by the harness.
pub mod substream {
    pub const ENVIRONMENT: u64 = 0;
    pub const POLICY: u64 = 1;
    pub const METRICS: u64 = 2;
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A deterministic random stream identified by `(master_seed, stream_id, substream)`.
#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    stream_id: u64,
    substream: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self::with_substream(master_seed, stream_id, 0)
    }

    pub fn with_substream(master_seed: u64, stream_id: u64, substream: u64) -> Self {
        let mut state = master_seed.wrapping_add(substream.wrapping_mul(GOLDEN_GAMMA));
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut inner = ChaCha8Rng::from_seed(key);
        inner.set_stream(stream_id);
        Self {
            master_seed,
            stream_id,
            substream,
            inner,
        }
    }

    /// A sibling stream with the same seed and replication but another substream.
    pub fn substream(&self, substream: u64) -> Self {
        Self::with_substream(self.master_seed, self.stream_id, substream)
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn substream_id(&self) -> u64 {
        self.substream
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n`. `n` must be nonzero.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.uniform() * n as f64) as usize).min(n - 1)
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
