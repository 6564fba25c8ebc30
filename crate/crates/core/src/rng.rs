//! Deterministic, splittable random streams.
//!
//! Every random draw in the crate comes from a [`SeedStream`]: a ChaCha8
//! keystream whose 256-bit key is expanded from a `u64` seed (via
//! `rand_core`'s PCG32-based `seed_from_u64`) and whose 64-bit stream id
//! selects an independent sub-sequence. ChaCha is counter based, so child
//! streams derived with [`SeedStream::split`] never overlap their parent and
//! do not depend on how many values the parent has already produced.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Named generator: ChaCha8 keyed by `seed_from_u64(seed)`, stream `id`.
#[derive(Debug, Clone)]
pub struct SeedStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Derives an independent child stream keyed by `label`.
    ///
    /// The child depends only on `(seed, stream, label)`, never on the
    /// parent's position, so callers can split in any order.
    pub fn split(&self, label: u64) -> SeedStream {
        SeedStream::with_stream(self.seed, mix(self.stream, label))
    }

    /// Convenience: child stream keyed by a static name.
    pub fn split_named(&self, name: &str) -> SeedStream {
        self.split(fnv1a(name.as_bytes()))
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }
}

impl RngCore for SeedStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

// splitmix64 finalizer over the combined words
fn mix(stream: u64, label: u64) -> u64 {
    let mut z = stream.rotate_left(29).wrapping_add(label).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}
