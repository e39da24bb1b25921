//! Seeded randomness. Every stochastic step derives its generator from a
//! `(seed, tag...)` tuple so results do not depend on call order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matlin::{polar_unitary, CMatrix, C64};

pub type SeededRng = ChaCha8Rng;

/// Generator for the tuple `(seed, tags...)` (splitmix-style mixing).
pub fn derive(seed: u64, tags: &[u64]) -> SeededRng {
    let mut h = seed ^ 0x9E37_79B9_7F4A_7C15;
    for &t in tags {
        h = mix(h ^ mix(t.wrapping_add(0x632B_E59B_D9B4_E019)));
    }
    ChaCha8Rng::seed_from_u64(mix(h))
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(gaussian(rng), gaussian(rng)) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn complex_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// GUE-distributed hermitian matrix.
pub fn hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = complex_matrix(n, n, rng);
    (&g + g.adjoint()) * C64::new(0.5, 0.0)
}

/// Haar-distributed unitary (polar factor of a Ginibre matrix).
pub fn unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    polar_unitary(&complex_matrix(n, n, rng))
}

/// Isometry `C^k → C^n` (`n ≥ k`) with Haar-random range.
pub fn isometry<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> CMatrix {
    polar_unitary(&complex_matrix(n, n, rng)).columns(0, k).into_owned()
}
