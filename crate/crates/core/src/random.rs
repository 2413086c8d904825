//! Seeded input sequences.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::CVec;

/// `len` input vectors of dimension `m` with entries uniform on `[-1, 1]`.
/// The same seed always yields the same sequence.
pub fn uniform_inputs(seed: u64, m: usize, len: usize) -> Vec<CVec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| CVec::from_fn(m, |_, _| Complex64::new(rng.random_range(-1.0..=1.0), 0.0)))
        .collect()
}
