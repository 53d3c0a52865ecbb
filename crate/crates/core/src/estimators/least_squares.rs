use rayon::prelude::*;

use super::partition::{block_means, block_sums, for_each_constrained_partition, kappa_rule, lifted, Partition};
use super::search::{alternate, improves, pick_best, starts, LsState};
use super::{Diagnostics, EstimationResult, EstimatorMode};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics::matrix_lp;
use crate::SearchBudget;

/// Upper limit on batch reassignment rounds before local polishing.
const ALTERNATING_ROUNDS: usize = 50;

/// Largest n for exhaustive least squares.
pub const EXACT_LEAST_SQUARES_MAX_N: usize = 13;

fn check_square_symmetric(a: &Matrix) -> Result<()> {
    if !a.is_symmetric() {
        return Err(Error::Domain("estimators need a symmetric matrix".into()));
    }
    if a.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("matrix has non-finite entries".into()));
    }
    Ok(())
}

/// ‖A − A_π‖₂.
pub(crate) fn ls_objective(a: &Matrix, pi: &Partition) -> Result<f64> {
    let b = block_means(a, pi)?;
    Ok(matrix_lp(&a.sub(&lifted(&b, pi))?, 2.0))
}

/// Global least squares fit over partitions with non-empty classes of size
/// ≥ ⌊κn⌋ and at most ⌈n/⌊κn⌋⌉ classes. Ties go to the lexicographically
/// smallest restricted-growth assignment.
pub fn least_squares_exact(a: &Matrix, kappa: f64) -> Result<EstimationResult> {
    check_square_symmetric(a)?;
    let n = a.n();
    let (min_size, k) = kappa_rule(n, kappa)?;
    if n > EXACT_LEAST_SQUARES_MAX_N {
        return Err(Error::Size {
            what: "exact least squares",
            n,
            max: EXACT_LEAST_SQUARES_MAX_N,
            hint: "use the search variant (least_squares_search / --mode search)",
        });
    }
    let total_sq: f64 = a.data().iter().map(|v| v * v).sum();
    let mut best = (f64::INFINITY, Vec::new());
    for_each_constrained_partition(n, min_size, k, &mut |labels, groups| {
        let pi = Partition::from_assignment(labels.to_vec());
        let s = block_sums(a, &pi);
        let sizes = pi.sizes();
        let mut energy = 0.0;
        for x in 0..groups {
            for y in 0..groups {
                energy += s[x * groups + y].powi(2) / (sizes[x] * sizes[y]) as f64;
            }
        }
        let v = (total_sq - energy).max(0.0);
        if improves(v, best.0) {
            best = (v, labels.to_vec());
        }
    });
    let pi = Partition::from_assignment(best.1);
    let objective = ls_objective(a, &pi)?;
    EstimationResult::build(a, pi, objective, EstimatorMode::Exact, Diagnostics::default())
}

/// Local search upper bound on the least squares optimum.
///
/// Each start is a feasible partition. Alternating rounds first reassign all
/// vertices against a frozen B = A/π and repair undersized classes, kept
/// only while they lower the objective. The result is then polished by
/// single-vertex moves (and pair swaps when no move helps) with B kept
/// current after every move, so the objective is nonincreasing along the
/// whole path and every iterate is feasible. The best start wins, ties to
/// the canonical assignment.
pub fn least_squares_search(a: &Matrix, kappa: f64, budget: &SearchBudget) -> Result<EstimationResult> {
    check_square_symmetric(a)?;
    let n = a.n();
    let (min_size, k) = kappa_rule(n, kappa)?;
    let all = starts(a, min_size, k, budget.restarts, budget.seed);
    let runs: Vec<(f64, Vec<usize>, Vec<f64>)> = all
        .into_par_iter()
        .map(|s| {
            let (s, mut trace) = alternate(a, s, k, min_size, ALTERNATING_ROUNDS);
            let mut st = LsState::new(a, s, k, min_size);
            trace.extend(st.descend(budget.max_iters));
            let pi = Partition::from_assignment(st.assign.clone()).canonical();
            let v = ls_objective(a, &pi).unwrap_or(f64::INFINITY);
            (v, pi.assign().to_vec(), trace)
        })
        .collect();
    let keyed: Vec<(f64, Vec<usize>)> = runs.iter().map(|r| (r.0, r.1.clone())).collect();
    let i = pick_best(&keyed);
    let (objective, assign, trace) = runs[i].clone();
    let diagnostics = Diagnostics {
        restarts_used: runs.len(),
        trace,
        ..Diagnostics::default()
    };
    EstimationResult::build(a, Partition::from_assignment(assign), objective, EstimatorMode::Search, diagnostics)
}
