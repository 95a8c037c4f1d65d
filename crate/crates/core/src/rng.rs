//! Seeded randomness. Everything stochastic in the crate draws from a
//! ChaCha8 stream so results are reproducible across platforms.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as Rng;

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Derives an independent stream from a parent seed and a purpose tag.
pub fn derive(seed: u64, stream: u64) -> Rng {
    let mut rng = Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
