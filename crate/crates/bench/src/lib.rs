//! Fixtures shared by the benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vos_core::imaging::{self, add_gaussian_noise};
use vos_core::{NoiseSpec, ScalarField, SyntheticKind, SyntheticSpec, VectorField};

/// Noisy piecewise affine square, variance 0.05.
pub fn noisy_square(n: usize) -> ScalarField {
    let clean = imaging::synthesize(&SyntheticSpec::new(SyntheticKind::PiecewiseAffineSquare, n)).expect("n >= 8");
    add_gaussian_noise(&clean, &NoiseSpec::zero_mean(0.05, 1).expect("valid variance"))
}

pub fn random_vector_field(n: usize, seed: u64) -> VectorField {
    let shape = vos_core::Shape::square(n).expect("n >= 1");
    VectorField::random_uniform(shape, -1.0, 1.0, &mut ChaCha8Rng::seed_from_u64(seed))
}
