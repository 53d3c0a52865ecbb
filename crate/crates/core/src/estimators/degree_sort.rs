use super::partition::{block_means, lifted, Partition};
use super::{Diagnostics, EstimationResult, EstimatorMode};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics::matrix_lp;

/// Class boundary n_i = round(i·n/k), halves rounded up.
fn boundary(i: usize, n: usize, k: usize) -> usize {
    (2 * i * n + k) / (2 * k)
}

/// Sort vertices by degree (descending, ties by index) and cut the order into
/// k consecutive classes at the boundaries n_i = round(i·n/k). Class 0 holds
/// the highest degrees. Empty classes (k > n) are dropped.
pub fn degree_sorting(a: &Matrix, k: usize) -> Result<EstimationResult> {
    if k == 0 {
        return Err(Error::Parameter("degree sorting needs k >= 1".into()));
    }
    if !a.is_symmetric() {
        return Err(Error::Domain("estimators need a symmetric matrix".into()));
    }
    let n = a.n();
    if a.data().iter().all(|&v| v == 0.0) {
        return Err(Error::Degenerate("degree sorting needs a graph with at least one edge".into()));
    }
    let deg = a.degrees();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| deg[j].total_cmp(&deg[i]).then(i.cmp(&j)));
    let mut assign = vec![0; n];
    for c in 0..k {
        for &v in &order[boundary(c, n, k)..boundary(c + 1, n, k)] {
            assign[v] = c;
        }
    }
    let pi = Partition::new(assign, k)?;
    let b = block_means(a, &pi)?;
    let objective = matrix_lp(&a.sub(&lifted(&b, &pi))?, 1.0);
    EstimationResult::build(a, pi, objective, EstimatorMode::Exact, Diagnostics::default())
}
