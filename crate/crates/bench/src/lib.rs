//! Fixed inputs shared by the benchmarks.

use graphon_core::sampling::sample;
use graphon_core::{BlockModel, Graphon, Matrix};

/// Two-block graph with n vertices at density ρ.
pub fn planted_graph(n: usize, rho: f64, seed: u64) -> Matrix {
    let w = Graphon::step(BlockModel::new(vec![0.5, 0.5], &[vec![0.5, 1.5], vec![1.5, 0.5]]).expect("valid model"));
    sample(&w, n, rho, seed).expect("valid sample").g.into_matrix()
}

/// Deterministic signed matrix with entries in [-1, 1].
pub fn signed_matrix(n: usize) -> Matrix {
    Matrix::from_fn(n, |i, j| (((i * 31 + j * 17) % 13) as f64 / 6.0) - 1.0)
}
