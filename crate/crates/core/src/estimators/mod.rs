//! Block-model estimators: least squares, least cut norm and degree sorting.

mod degree_sort;
mod least_cut;
mod least_squares;
mod partition;
mod search;

#[cfg(test)]
mod tests;

use serde::{Deserialize, Serialize};

pub use degree_sort::degree_sorting;
pub use least_cut::{least_cut_exact, least_cut_search, EXACT_LEAST_CUT_MAX_N};
pub use least_squares::{least_squares_exact, least_squares_search, EXACT_LEAST_SQUARES_MAX_N};
pub use partition::{block_average, for_each_constrained_partition, kappa_rule, lifted, Partition};

use crate::error::Result;
use crate::graphon::BlockModel;
use crate::matrix::{density, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorMode {
    Exact,
    Search,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub restarts_used: usize,
    /// Objective after each accepted move of the winning start.
    pub trace: Vec<f64>,
    /// Classes of the partition that were empty and dropped from (p̂, B̂).
    pub empty_classes_dropped: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub caveat: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    /// p̂ = relative class sizes, B̂ = block averages.
    pub model: BlockModel,
    pub partition: Partition,
    /// Residual in the algorithm's own norm: ‖A − A_π‖₂ for least squares,
    /// ‖A − A_π‖_□ for least cut, ‖A − A_π‖₁ for degree sorting.
    pub objective: f64,
    /// B̂ / ρ(A); equal to B̂ when ρ(A) = 0.
    pub normalized: BlockModel,
    pub mode: EstimatorMode,
    pub diagnostics: Diagnostics,
}

impl EstimationResult {
    pub(crate) fn build(
        a: &Matrix,
        partition: Partition,
        objective: f64,
        mode: EstimatorMode,
        mut diagnostics: Diagnostics,
    ) -> Result<Self> {
        let n = a.n();
        let dropped = partition.k() - partition.nonempty_classes();
        let partition = partition.without_empty_classes();
        let (b, _) = block_average(a, &partition)?;
        let k = partition.k();
        let p: Vec<f64> = partition.sizes().iter().map(|&s| s as f64 / n as f64).collect();
        let model = BlockModel::from_flat(p.clone(), b.data().to_vec())?;
        let rho = density(a);
        let normalized = if rho > 0.0 {
            BlockModel::from_flat(p, b.data().iter().map(|v| v / rho).collect())?
        } else {
            model.clone()
        };
        debug_assert_eq!(model.k(), k);
        diagnostics.empty_classes_dropped += dropped;
        Ok(EstimationResult {
            model,
            partition,
            objective,
            normalized,
            mode,
            diagnostics,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
