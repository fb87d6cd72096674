//! Counter-based random substreams.
//!
//! Each trial or shot draws from its own ChaCha stream keyed by
//! `(seed, index)`, so Monte Carlo output does not depend on how work is
//! split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
