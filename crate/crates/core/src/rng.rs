//! Counter-based random streams.
//!
//! Every stream is a ChaCha8 keystream keyed by the 64-bit seed and selected
//! by a 64-bit stream id, so the numbers a path or sample sees depend only on
//! `(seed, id)` and never on which worker evaluates it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream(seed: u64, id: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}
