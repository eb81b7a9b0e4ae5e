//! Seeded random streams.
//!
//! Every chain owns a `ChaCha8Rng` keyed by a user seed and a stream id, so
//! chains launched in parallel from one seed never share random numbers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type ChainRng = ChaCha8Rng;

/// Deterministic generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChainRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn fill_standard_normal<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    for v in out.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
}

/// Uniform direction on the unit sphere in `dim` dimensions.
pub fn unit_direction<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    let mut u = vec![0.0; dim];
    loop {
        fill_standard_normal(rng, &mut u);
        let norm = crate::linalg::norm(&u);
        if norm > 0.0 {
            u.iter_mut().for_each(|v| *v /= norm);
            return u;
        }
    }
}

/// Uniform point in the ball `B(center, radius)`.
pub fn uniform_in_ball<R: Rng + ?Sized>(rng: &mut R, center: &[f64], radius: f64) -> Vec<f64> {
    let dim = center.len();
    let u = unit_direction(rng, dim);
    let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
    center.iter().zip(&u).map(|(c, ui)| c + r * ui).collect()
}
