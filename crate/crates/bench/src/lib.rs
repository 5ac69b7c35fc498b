//! Deterministic inputs shared by the benchmarks.

use ffoptic::net::l2_normalize;
use ffoptic::readout::FeatureMatrix;
use ffoptic::FEATURES;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A unit-norm non-negative 32×32 stage representation.
pub fn stage_input(seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<f64> = (0..FEATURES).map(|_| rng.random_range(0.0..1.0)).collect();
    l2_normalize(&v).expect("non-zero input")
}

/// Random features with labels cycling through the ten classes.
pub fn ridge_problem(rows: usize, cols: usize, seed: u64) -> (FeatureMatrix, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
    let labels = (0..rows).map(|i| i % 10).collect();
    (FeatureMatrix::new(rows, cols, data).expect("consistent shape"), labels)
}
