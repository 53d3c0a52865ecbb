//! Seed handling.
//!
//! Every random routine takes a 64-bit master seed and derives its own
//! substream from it, so that e.g. the latent draws of a sample never depend
//! on how many edge coins were flipped afterwards.
//!
//! Derivation: `key = splitmix64(seed ^ splitmix64(purpose))`, and the
//! generator is `ChaCha8Rng::seed_from_u64(key)`. Routines that loop over rows
//! additionally select the ChaCha stream id `row` on that generator, so row
//! `i` always consumes the same keystream regardless of how rows are
//! scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags for substreams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Latent = 1,
    Edges = 2,
    Search = 3,
    Restart = 4,
    MonteCarlo = 5,
    Coupling = 6,
    Trial = 7,
    Partitions = 8,
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, purpose: Stream) -> u64 {
    splitmix64(seed ^ splitmix64(purpose as u64))
}

/// Sub-seed for the `index`-th child of a derived seed (restart number, trial number, ...).
pub fn child_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed.wrapping_add(splitmix64(index.wrapping_add(0xA5A5_A5A5))))
}

pub fn stream_rng(seed: u64, purpose: Stream) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, purpose))
}

/// Generator for row `row` of a row-partitioned loop.
pub fn row_rng(seed: u64, purpose: Stream, row: u64) -> ChaCha8Rng {
    let mut rng = stream_rng(seed, purpose);
    rng.set_stream(row);
    rng
}
