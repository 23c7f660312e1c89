//! Seed derivation.
//!
//! Every random quantity in the simulator is drawn from a ChaCha12 stream.
//! A master seed fixes the key; the trial (or iteration) index selects the
//! ChaCha stream id, so trial `t` can be regenerated in isolation without
//! replaying trials `0..t`. Nested derivations (for example the public dither
//! stream of one retrieval) take a fresh `u64` from the parent stream as their
//! own master seed.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Random stream type used throughout the crate.
pub type SimRng = ChaCha12Rng;

/// Stream for trial `index` under `master_seed`.
pub fn stream(master_seed: u64, index: u64) -> SimRng {
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Draws a child master seed from `parent`.
pub fn child_seed<R: RngCore + ?Sized>(parent: &mut R) -> u64 {
    parent.next_u64()
}
