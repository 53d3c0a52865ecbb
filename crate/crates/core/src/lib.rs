//! Graphon estimation for sparse graphs: graphon representations, W-random
//! graph sampling, matrix and graphon distances, and the least squares,
//! least cut norm and degree sorting estimators.

pub mod error;
pub mod estimators;
pub mod experiments;
pub mod graphon;
pub mod matrix;
pub mod metrics;
pub mod quadrature;
pub mod rng;
pub mod sampling;

use serde::{Deserialize, Serialize};

pub use error::{Error, Result};
pub use graphon::{BlockModel, Graphon, IntervalPartition, Latent, Point};
pub use matrix::{Matrix, Role, SymMatrix};
pub use metrics::levy::Cdf;
pub use quadrature::{Estimate, QuadratureSpec};

/// Work limits for heuristic searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBudget {
    /// Random restarts on top of the deterministic starting points.
    pub restarts: usize,
    /// Cap on accepted improving moves per start.
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            restarts: 8,
            max_iters: 100_000,
            seed: 0,
        }
    }
}
