use rayon::prelude::*;

use super::least_squares::least_squares_search;
use super::partition::{block_means, for_each_constrained_partition, kappa_rule, lifted, Partition};
use super::search::{generic_descent, improves, pick_best, starts};
use super::{Diagnostics, EstimationResult, EstimatorMode};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics::norms::{cut_lower_with, cut_norm_exact};
use crate::SearchBudget;

/// Largest n for exhaustive least cut norm.
pub const EXACT_LEAST_CUT_MAX_N: usize = 10;
/// Up to this n the search scores candidates with the exact cut norm.
const SEARCH_EXACT_CUT_MAX_N: usize = 12;
const MAX_EVALS_PER_START: usize = 20_000;

fn residual(a: &Matrix, pi: &Partition) -> Result<Matrix> {
    let b = block_means(a, pi)?;
    a.sub(&lifted(&b, pi))
}

fn cut_exact_objective(a: &Matrix, pi: &Partition) -> Result<f64> {
    Ok(cut_norm_exact(&residual(a, pi)?)?.value)
}

/// Global minimizer of ‖A − A_π‖_□ over the κ-constrained partitions, ties
/// to the lexicographically smallest restricted-growth assignment.
pub fn least_cut_exact(a: &Matrix, kappa: f64) -> Result<EstimationResult> {
    if !a.is_symmetric() {
        return Err(Error::Domain("estimators need a symmetric matrix".into()));
    }
    let n = a.n();
    let (min_size, k) = kappa_rule(n, kappa)?;
    if n > EXACT_LEAST_CUT_MAX_N {
        return Err(Error::Size {
            what: "exact least cut norm",
            n,
            max: EXACT_LEAST_CUT_MAX_N,
            hint: "use the search variant (least_cut_search / --mode search)",
        });
    }
    let mut best = (f64::INFINITY, Vec::new());
    let mut failure = None;
    for_each_constrained_partition(n, min_size, k, &mut |labels, _| {
        match cut_exact_objective(a, &Partition::from_assignment(labels.to_vec())) {
            Ok(v) => {
                if improves(v, best.0) {
                    best = (v, labels.to_vec());
                }
            }
            Err(e) => failure = Some(e),
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let pi = Partition::from_assignment(best.1);
    EstimationResult::build(a, pi, best.0, EstimatorMode::Exact, Diagnostics::default())
}

/// Local search upper bound on the least cut norm optimum.
///
/// Candidates are scored by the exact cut norm of the residual for n ≤ 12
/// and by the alternating lower bound above that, in which case the reported
/// objective is itself only a lower estimate of the candidate's true
/// residual and the result carries a caveat. Starts are the least squares
/// search output plus the usual feasible starts.
pub fn least_cut_search(a: &Matrix, kappa: f64, budget: &SearchBudget) -> Result<EstimationResult> {
    if !a.is_symmetric() {
        return Err(Error::Domain("estimators need a symmetric matrix".into()));
    }
    let n = a.n();
    let (min_size, k) = kappa_rule(n, kappa)?;
    let exact = n <= SEARCH_EXACT_CUT_MAX_N;
    let score = |assign: &[usize]| -> f64 {
        let pi = Partition::from_assignment(assign.to_vec());
        let Ok(r) = residual(a, &pi) else {
            return f64::INFINITY;
        };
        if exact {
            cut_norm_exact(&r).map_or(f64::INFINITY, |c| c.value)
        } else {
            cut_lower_with(&r, 2, budget.seed, false).value
        }
    };
    let ls = least_squares_search(
        a,
        kappa,
        &SearchBudget {
            restarts: budget.restarts.min(4),
            ..*budget
        },
    )?;
    let mut all = vec![ls.partition.assign().to_vec()];
    all.extend(starts(a, min_size, k, budget.restarts, budget.seed ^ 0x5EED));
    let runs: Vec<(f64, Vec<usize>, Vec<f64>)> = all
        .into_par_iter()
        .map(|s| {
            let (_, assign, trace) = generic_descent(s, k, min_size, budget.max_iters, MAX_EVALS_PER_START, &score);
            let pi = Partition::from_assignment(assign).canonical();
            (score(pi.assign()), pi.assign().to_vec(), trace)
        })
        .collect();
    let keyed: Vec<(f64, Vec<usize>)> = runs.iter().map(|r| (r.0, r.1.clone())).collect();
    let i = pick_best(&keyed);
    let (objective, assign, trace) = runs[i].clone();
    let diagnostics = Diagnostics {
        restarts_used: runs.len(),
        trace,
        caveat: (!exact).then(|| {
            "candidates scored by a heuristic cut norm lower bound; the objective is not a certified residual".to_string()
        }),
        ..Diagnostics::default()
    };
    EstimationResult::build(a, Partition::from_assignment(assign), objective, EstimatorMode::Search, diagnostics)
}
