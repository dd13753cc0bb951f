use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seeded, caller-owned random stream. Identical seeds and call sequences
/// give bit-identical output.
#[derive(Clone, Debug)]
pub struct RngState {
    seed: u64,
    inner: ChaCha8Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        RngState { seed, inner: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Independent stream for `(seed, stream, index)`, e.g. one per trial, so
    /// results never depend on evaluation order.
    pub fn derive(seed: u64, stream: u64, index: u64) -> Self {
        let mixed = splitmix64(splitmix64(seed ^ splitmix64(stream)) ^ index);
        RngState { seed: mixed, inner: ChaCha8Rng::seed_from_u64(mixed) }
    }

    /// Child stream drawn from this one.
    pub fn fork(&mut self) -> Self {
        RngState::new(self.inner.random())
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.inner.random::<f64>()
    }

    /// Uniform integer in `[lo, hi]`.
    pub fn int_inclusive(&mut self, lo: usize, hi: usize) -> usize {
        self.inner.random_range(lo..=hi)
    }

    pub fn coin(&mut self) -> bool {
        self.inner.random()
    }

    pub(crate) fn inner_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.inner
    }
}
