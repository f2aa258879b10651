//! Deterministic per-slot random streams.
//!
//! Every random draw in a run comes from a stream keyed by
//! `(master seed, iteration, slot, purpose)`, so dispatch order and worker
//! count cannot change outcomes, and a resumed run only needs the master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Purpose tag mixed into a stream key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Plan = 1,
    Execute = 2,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, iteration: u32, slot: usize, stream: Stream) -> u64 {
    let mut h = splitmix64(master);
    h = splitmix64(h ^ u64::from(iteration));
    h = splitmix64(h ^ slot as u64);
    splitmix64(h ^ stream as u64)
}

pub fn stream(master: u64, iteration: u32, slot: usize, stream: Stream) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, iteration, slot, stream))
}

pub fn from_seed(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}
