//! Reproducible random streams.
//!
//! Every random draw in the crate comes from a [`SeededStream`]: a 64-bit
//! seed plus a stream index. The pair selects a ChaCha8 keystream, so two
//! workers holding different stream indices never overlap and the same pair
//! always replays the same sequence, whichever thread happens to consume it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator handed out by [`SeededStream::rng`].
pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeededStream {
    pub seed: u64,
    pub stream_index: u64,
}

impl SeededStream {
    pub const fn new(seed: u64, stream_index: u64) -> Self {
        Self { seed, stream_index }
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_index);
        rng
    }

    /// Deterministically derived sub-stream, e.g. one per Monte Carlo chunk.
    ///
    /// Children of distinct parents or with distinct labels land on distinct
    /// stream indices with overwhelming probability.
    pub fn child(&self, label: u64) -> Self {
        Self {
            seed: self.seed,
            stream_index: splitmix64(splitmix64(self.stream_index) ^ label),
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}
