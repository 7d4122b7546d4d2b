//! Keyed random streams.
//!
//! Every random decision in the simulator is drawn from a ChaCha stream
//! selected by `(seed, purpose tag, counter)`. The tag separates independent
//! uses of one seed (packet loss vs. jitter vs. exploration), and the counter
//! (packet sequence number, episode index) selects the stream within a use.
//! Two draws with the same key always agree, regardless of the order in which
//! other keys were consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags. Distinct tags give statistically independent streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Loss = 0x6c6f_7373,
    Jitter = 0x6a69_7474,
    Trajectory = 0x7472_616a,
    Explore = 0x6578_706c,
    Episode = 0x6570_6973,
}

/// A keyed family of streams; cloning the base and switching the stream
/// number is cheap compared to re-keying.
#[derive(Debug, Clone)]
pub struct StreamFamily {
    base: ChaCha8Rng,
}

impl StreamFamily {
    pub fn new(seed: u64, purpose: Purpose) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&(purpose as u64).to_le_bytes());
        key[16..24].copy_from_slice(&seed.rotate_left(32).to_le_bytes());
        key[24..].copy_from_slice(b"twinsync");
        Self {
            base: ChaCha8Rng::from_seed(key),
        }
    }

    pub fn stream(&self, counter: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(counter);
        rng
    }
}

/// Shorthand for a one-off stream.
pub fn stream(seed: u64, purpose: Purpose, counter: u64) -> ChaCha8Rng {
    StreamFamily::new(seed, purpose).stream(counter)
}

/// Derives a child seed, e.g. the seed of episode `index` of a run.
pub fn derive_seed(seed: u64, purpose: Purpose, index: u64) -> u64 {
    use rand::RngCore;
    stream(seed, purpose, index).next_u64()
}
