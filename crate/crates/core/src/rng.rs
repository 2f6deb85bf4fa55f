//! Seeded random streams.
//!
//! Every random draw in the crate comes from ChaCha8 (`rand_chacha` 0.9).
//! Stream `k` under seed `s` is `ChaCha8Rng::seed_from_u64(s)` with
//! `set_stream(k)`: the seed fixes the key and the stream index selects an
//! independent keystream, so substreams can be generated in any order or on
//! any thread and still reproduce bit for bit.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Identifier recorded in output metadata.
pub const GENERATOR: &str = "chacha8/rand_chacha-0.9/seed_from_u64+set_stream";

/// Generator for substream `stream` of `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw on the open interval (0, 1) with 52 bits of resolution.
///
/// `(k + 0.5) / 2^52` is exact for every `k < 2^52`, so neither endpoint
/// can be produced by rounding.
#[inline]
pub fn open_unit<R: RngCore>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}
