//! Shared fixtures for the criterion benches.

use regkit_core::operators::LinearOperator;

/// The classical ill-conditioned symmetric test matrix.
pub fn hilbert(n: usize) -> LinearOperator {
    let entries: Vec<f64> = (0..n)
        .flat_map(|i| (0..n).map(move |j| 1.0 / ((i + j + 1) as f64)))
        .collect();
    LinearOperator::symmetric(n, entries).expect("valid symmetric matrix")
}

/// Deterministic dense matrix with entries in (-1/2, 1/2).
pub fn pseudo_random_dense(rows: usize, cols: usize, seed: u64) -> LinearOperator {
    let mut state = seed.max(1);
    let entries: Vec<f64> = (0..rows * cols)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state as f64 / u64::MAX as f64) - 0.5
        })
        .collect();
    LinearOperator::dense(rows, cols, entries).expect("valid dense matrix")
}
