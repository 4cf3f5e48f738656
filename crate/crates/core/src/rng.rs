//! Deterministic random streams.
//!
//! Every stochastic routine takes an [`RngStream`], a ChaCha8 generator keyed
//! by a 64-bit seed and a 64-bit stream id. ChaCha output is specified
//! bit-for-bit, so a `(seed, stream_id)` pair yields the same sequence on
//! every platform, and distinct stream ids select independent keystreams.
//! Monte Carlo drivers take a base stream and give trial `i` of arm `j` the
//! stream [`RngStream::child`]`(j, i)`, which makes results independent of
//! how trials are scheduled across threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Name recorded in experiment metadata.
pub const RNG_ALGORITHM: &str = "chacha8 (rand_chacha 0.9, seed_from_u64 + set_stream)";

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
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

    /// Stream for trial `trial` of experiment arm `arm`.
    pub fn for_trial(seed: u64, arm: u32, trial: u32) -> Self {
        Self::new(seed, (u64::from(arm) << 32) | u64::from(trial))
    }

    /// Independent stream for trial `trial` of arm `arm` of the experiment
    /// keyed by this stream's `(seed, stream_id)`. Does not advance `self`.
    pub fn child(&self, arm: u32, trial: u32) -> Self {
        Self::for_trial(splitmix64(self.seed ^ splitmix64(self.stream_id)), arm, trial)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
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

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
