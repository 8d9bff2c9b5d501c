//! Addressable random streams.
//!
//! A [`StreamRng`] is a ChaCha8 generator keyed by `(master_seed, stream_index)`.
//! Trial loops never share a generator: trial `t` of a loop driven by `rng`
//! draws from `rng.trial(t)`, which for a root stream `(s, 0)` is exactly `(s, t)`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct StreamRng {
    master_seed: u64,
    stream_index: u64,
    inner: ChaCha8Rng,
}

impl StreamRng {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(master_seed);
        inner.set_stream(stream_index);
        Self { master_seed, stream_index, inner }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// Stream for trial `t` of a loop seeded by this generator's address.
    pub fn trial(&self, t: u64) -> StreamRng {
        StreamRng::new(self.loop_seed(), t)
    }

    /// Independent child address, for running several loops off one seed.
    pub fn child(&self, index: u64) -> StreamRng {
        StreamRng::new(splitmix64(self.loop_seed() ^ splitmix64(index.wrapping_add(1))), 0)
    }

    fn loop_seed(&self) -> u64 {
        if self.stream_index == 0 {
            self.master_seed
        } else {
            splitmix64(self.master_seed ^ splitmix64(self.stream_index))
        }
    }
}

impl RngCore for StreamRng {
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

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
