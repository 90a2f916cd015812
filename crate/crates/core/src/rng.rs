//! Seeded, splittable random streams.
//!
//! A [`Seed`] names a ChaCha8 stream: `master` seeds the key and `stream`
//! selects one of the 2^64 independent streams for that key. Child seeds are
//! derived by hashing, so a tree of (cell, replication, purpose) indices maps
//! to fixed streams no matter which thread consumes them.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed {
    pub master: u64,
    pub stream: u64,
}

impl Seed {
    pub const fn new(master: u64, stream: u64) -> Self {
        Self { master, stream }
    }

    /// Seed for the `index`-th child of this seed.
    pub fn derive(self, index: u64) -> Seed {
        let key =
            splitmix64(self.master ^ splitmix64(self.stream.wrapping_add(0x6a09_e667_f3bc_c909)));
        Seed {
            master: key,
            stream: index,
        }
    }

    pub fn rng(self) -> StreamRng {
        let mut inner = ChaCha8Rng::seed_from_u64(self.master);
        inner.set_stream(self.stream);
        StreamRng { inner }
    }
}

impl Default for Seed {
    fn default() -> Self {
        Seed::new(20_240_601, 0)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A single random stream. Not to be shared between concurrent consumers.
#[derive(Debug, Clone)]
pub struct StreamRng {
    inner: ChaCha8Rng,
}

impl StreamRng {
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw on the open interval (0, 1), 53 bits of resolution.
    pub fn open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw on [0, 1).
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform index in `0..n` via a widening multiply (bias below n / 2^64).
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }
}
