//! Seeded fixtures shared by the criterion benches.

use cdmm_core::{GaloisRing, Matrix, RingElement};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random `t x r` and `r x s` matrices over `ring`.
pub fn matrix_pair(ring: &GaloisRing, (t, r, s): (usize, usize, usize), seed: u64) -> (Matrix, Matrix) {
    let mut g = rng(seed);
    (Matrix::random(ring, t, r, &mut g), Matrix::random(ring, r, s, &mut g))
}

pub fn elements(ring: &GaloisRing, count: usize, seed: u64) -> Vec<RingElement> {
    let mut g = rng(seed);
    (0..count).map(|_| ring.random_element(&mut g)).collect()
}
