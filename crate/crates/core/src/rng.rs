//! Seeded randomness helpers on top of ChaCha8.
//!
//! Sampling is written against `next_u64` directly (53-bit uniform,
//! Box-Muller normals) so the byte streams produced for a given seed do
//! not depend on distribution-crate internals.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Deterministic generator for a (seed, stream) pair. Distinct streams
/// share a seed but never overlap.
pub fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw in [0, 1) with 53 bits of precision.
#[inline]
pub fn uniform01<R: RngCore>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal via Box-Muller. Uses two uniforms per draw; the sine
/// partner is discarded to keep the draw count per sample fixed.
pub fn standard_normal<R: RngCore>(rng: &mut R) -> f64 {
    // 1 - u keeps the argument of ln strictly positive
    let u1 = 1.0 - uniform01(rng);
    let u2 = uniform01(rng);
    crate::math::sqrt(-2.0 * crate::math::ln(u1))
        * crate::math::cos(2.0 * core::f64::consts::PI * u2)
}
