//! Deterministic random streams.
//!
//! Every random draw in the crate comes from ChaCha8 (`rand_chacha`), whose
//! output is specified independently of platform and word size. A 64-bit seed
//! is expanded into the 256-bit key with `SeedableRng::seed_from_u64`, and
//! independent sub-streams (one per subject, per layer, per purpose) are
//! selected with the ChaCha stream counter rather than by hashing seeds.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as DetRng;

/// Generator for `seed`, positioned on stream `stream`.
pub fn stream(seed: u64, stream: u64) -> DetRng {
    let mut rng = DetRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Named stream ids so unrelated consumers of one seed never overlap.
pub mod streams {
    pub const FOLDS: u64 = 1;
    pub const GBM_SUBSAMPLE: u64 = 2;
    pub const ENCODER_INIT: u64 = 3;
    pub const ENCODER_SHUFFLE: u64 = 4;
    /// Subject `i` uses stream `SUBJECT_BASE + i`.
    pub const SUBJECT_BASE: u64 = 1 << 32;
}
