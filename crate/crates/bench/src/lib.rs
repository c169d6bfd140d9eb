//! Shared fixtures for the benchmarks.

use inae_core::{gen_two_moons, Dataset};
use ndarray::Array2;

/// Two-moons data of the size used in the experiments.
pub fn moons(n_per_class: usize, seed: u64) -> Dataset {
    gen_two_moons(n_per_class, 9, 0.1, seed).expect("valid generator arguments")
}

/// Deterministic dense matrix with entries in `[0, 1)`.
pub fn filled(rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |(i, j)| ((i * 7919 + j * 104_729) % 1000) as f64 / 1000.0)
}
