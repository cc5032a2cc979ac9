//! Seeded, splittable randomness.
//!
//! A run is driven by a single [`Seed`]. Every component that needs random
//! bits asks for its own substream by `(label, index)`: the ChaCha8 key is
//! expanded from the seed and the 64-bit ChaCha stream id is derived from the
//! label and index. Adversaries, generators and each algorithm instance
//! therefore never share a stream, and a substream does not depend on how
//! much any other component has consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator handed to every component.
pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Seed(pub u64);

impl Seed {
    pub fn new(value: u64) -> Self {
        Seed(value)
    }

    pub fn value(self) -> u64 {
        self.0
    }

    /// Substream for component `label`, instance `index`.
    pub fn substream(self, label: &str, index: u64) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(stream_id(label, index));
        rng
    }

    /// A child seed, for components that themselves split further
    /// (for example one ensemble member spawning its own substreams).
    pub fn child(self, label: &str, index: u64) -> Seed {
        Seed(splitmix64(self.0 ^ stream_id(label, index)))
    }
}

impl From<u64> for Seed {
    fn from(v: u64) -> Self {
        Seed(v)
    }
}

fn stream_id(label: &str, index: u64) -> u64 {
    splitmix64(fnv1a64(label.as_bytes()).wrapping_add(splitmix64(index)))
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
