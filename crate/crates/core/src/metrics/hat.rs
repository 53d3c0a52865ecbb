//! Relabeling-invariant distances: δ̂_p and δ̂_□ between matrices and δ̂_p
//! between a matrix and a graphon over [0,1].
//!
//! Exact mode enumerates all n! permutations in lexicographic order and keeps
//! the first minimizer. Heuristic mode starts from the degree-sorted
//! alignment plus random permutations and applies transposition local search.
//! A permutation σ acts by A^σ_ij = A_{σ(i)σ(j)}.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::norms::{cut_norm_exact, cut_norm_lower, matrix_lp};
use crate::error::{Error, Result};
use crate::graphon::Graphon;
use crate::matrix::Matrix;
use crate::quadrature::QuadratureSpec;
use crate::rng::{child_seed, stream_rng, Stream};
use crate::SearchBudget;

/// Largest n for exhaustive permutation search.
pub const EXACT_PERM_MAX_N: usize = 9;
/// Largest n for which the heuristic δ̂_□ search scores swaps with the exact
/// cut norm; above it the alternating lower bound is used.
const HEURISTIC_EXACT_CUT_N: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    Heuristic,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Mode::Exact),
            "heuristic" => Ok(Mode::Heuristic),
            _ => Err(Error::Parameter(format!("mode must be exact or heuristic, got {s:?}"))),
        }
    }
}

/// Best relabeling found and its distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    pub value: f64,
    pub sigma: Vec<usize>,
    pub mode: Mode,
    /// Set when `value` is not the exact minimum.
    pub bounds_caveat: Option<String>,
}

/// Advance to the next permutation in lexicographic order.
pub(crate) fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

fn check_exact(n: usize) -> Result<()> {
    if n > EXACT_PERM_MAX_N {
        return Err(Error::Size {
            what: "exact permutation search",
            n,
            max: EXACT_PERM_MAX_N,
            hint: "use --mode heuristic",
        });
    }
    Ok(())
}

/// Minimize `objective` over all permutations; ties keep the lexicographically first.
fn exhaustive(n: usize, mut objective: impl FnMut(&[usize]) -> f64) -> (f64, Vec<usize>) {
    let mut sigma: Vec<usize> = (0..n).collect();
    let mut best = (objective(&sigma), sigma.clone());
    while next_permutation(&mut sigma) {
        let v = objective(&sigma);
        if v < best.0 {
            best = (v, sigma.clone());
        }
    }
    best
}

/// σ aligning A's vertices to B's by degree rank: the vertex of B with the
/// r-th largest degree receives the vertex of A with the r-th largest degree.
fn degree_alignment(a: &Matrix, b_degrees: &[f64]) -> Vec<usize> {
    let rank = |d: &[f64]| {
        let mut idx: Vec<usize> = (0..d.len()).collect();
        idx.sort_by(|&x, &y| d[y].total_cmp(&d[x]).then(x.cmp(&y)));
        idx
    };
    let ra = rank(&a.degrees());
    let rb = rank(b_degrees);
    let mut sigma = vec![0; ra.len()];
    for (r, &j) in rb.iter().enumerate() {
        sigma[j] = ra[r];
    }
    sigma
}

/// Transposition local search on a cellwise objective Σ_ij cost(i, j, σi, σj),
/// using O(n) swap deltas. Returns the improved σ.
fn swap_search(n: usize, mut sigma: Vec<usize>, max_iters: usize, cost: &impl Fn(usize, usize, usize, usize) -> f64) -> Vec<usize> {
    let delta = |s: &[usize], u: usize, v: usize| {
        let mut t = s.to_vec();
        t.swap(u, v);
        let mut d = 0.0;
        for j in 0..n {
            for &i in &[u, v] {
                d += cost(i, j, t[i], t[j]) - cost(i, j, s[i], s[j]);
            }
        }
        for i in (0..n).filter(|&i| i != u && i != v) {
            for &j in &[u, v] {
                d += cost(i, j, t[i], t[j]) - cost(i, j, s[i], s[j]);
            }
        }
        d
    };
    let mut iters = 0;
    let mut improved = true;
    while improved && iters < max_iters {
        improved = false;
        for u in 0..n {
            for v in u + 1..n {
                if delta(&sigma, u, v) < -1e-12 {
                    sigma.swap(u, v);
                    improved = true;
                    iters += 1;
                }
            }
        }
    }
    sigma
}

/// Deterministic and random starting permutations for heuristic mode.
fn starts(n: usize, degree_start: Vec<usize>, budget: &SearchBudget) -> Vec<Vec<usize>> {
    let mut out = vec![degree_start, (0..n).collect()];
    let mut rng = stream_rng(budget.seed, Stream::Restart);
    for _ in 0..budget.restarts {
        let mut s: Vec<usize> = (0..n).collect();
        s.shuffle(&mut rng);
        out.push(s);
    }
    out
}

fn total_cost(n: usize, sigma: &[usize], cost: &impl Fn(usize, usize, usize, usize) -> f64) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += cost(i, j, sigma[i], sigma[j]);
        }
    }
    s
}

fn cellwise_search(
    n: usize,
    mode: Mode,
    budget: &SearchBudget,
    degree_start: impl FnOnce() -> Vec<usize>,
    cost: impl Fn(usize, usize, usize, usize) -> f64,
) -> Result<(f64, Vec<usize>)> {
    match mode {
        Mode::Exact => {
            check_exact(n)?;
            Ok(exhaustive(n, |s| total_cost(n, s, &cost)))
        }
        Mode::Heuristic => {
            let mut best: Option<(f64, Vec<usize>)> = None;
            for s in starts(n, degree_start(), budget) {
                let s = swap_search(n, s, budget.max_iters, &cost);
                let v = total_cost(n, &s, &cost);
                if best.as_ref().is_none_or(|b| v < b.0) {
                    best = Some((v, s));
                }
            }
            Ok(best.unwrap())
        }
    }
}

fn caveat(mode: Mode) -> Option<String> {
    (mode == Mode::Heuristic).then(|| "upper bound: local search over relabelings".to_string())
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Parameter(format!("p must be a finite value >= 1, got {p}")));
    }
    Ok(())
}

/// δ̂_p(A, B) = min_σ ‖A^σ − B‖_p.
pub fn hat_delta_p(a: &Matrix, b: &Matrix, p: f64, mode: Mode, budget: &SearchBudget) -> Result<Alignment> {
    a.check_same(b)?;
    check_p(p)?;
    let n = a.n();
    let cost = |i: usize, j: usize, si: usize, sj: usize| (a.get(si, sj) - b.get(i, j)).abs().powf(p);
    let (total, sigma) = cellwise_search(n, mode, budget, || degree_alignment(a, &b.degrees()), cost)?;
    let nf = n as f64;
    Ok(Alignment {
        value: (total / (nf * nf)).powf(1.0 / p),
        sigma,
        mode,
        bounds_caveat: caveat(mode),
    })
}

/// δ̂_□(A, B) = min_σ ‖A^σ − B‖_□.
pub fn hat_delta_cut(a: &Matrix, b: &Matrix, mode: Mode, budget: &SearchBudget) -> Result<Alignment> {
    a.check_same(b)?;
    let n = a.n();
    let diff = |s: &[usize]| {
        let mut d = a.permuted(s);
        for i in 0..n {
            for j in 0..n {
                d.set(i, j, d.get(i, j) - b.get(i, j));
            }
        }
        d
    };
    match mode {
        Mode::Exact => {
            check_exact(n)?;
            let (value, sigma) = exhaustive(n, |s| cut_norm_exact(&diff(s)).expect("n <= 9").value);
            Ok(Alignment {
                value,
                sigma,
                mode,
                bounds_caveat: None,
            })
        }
        Mode::Heuristic => {
            let exact_inner = n <= HEURISTIC_EXACT_CUT_N;
            let score = |s: &[usize], k: u64| {
                if exact_inner {
                    cut_norm_exact(&diff(s)).expect("small n").value
                } else {
                    cut_norm_lower(&diff(s), budget.restarts, child_seed(budget.seed, k)).value
                }
            };
            let mut best: Option<(f64, Vec<usize>)> = None;
            for (k, mut s) in starts(n, degree_alignment(a, &b.degrees()), budget).into_iter().enumerate() {
                let mut cur = score(&s, k as u64);
                let mut iters = 0;
                let mut improved = true;
                while improved && iters < budget.max_iters {
                    improved = false;
                    for u in 0..n {
                        for v in u + 1..n {
                            s.swap(u, v);
                            let val = score(&s, k as u64);
                            if val < cur - 1e-12 {
                                cur = val;
                                improved = true;
                                iters += 1;
                            } else {
                                s.swap(u, v);
                            }
                        }
                    }
                }
                if best.as_ref().is_none_or(|b| cur < b.0) {
                    best = Some((cur, s));
                }
            }
            let (value, sigma) = best.unwrap();
            let caveat = if exact_inner {
                "upper bound: local search over relabelings".to_string()
            } else {
                "local-search upper bound on the relabeling minimum of a heuristic lower bound on each cut norm; neither a certified upper nor lower bound".to_string()
            };
            Ok(Alignment {
                value,
                sigma,
                mode,
                bounds_caveat: Some(caveat),
            })
        }
    }
}

/// δ̂_p(A, W) = min_σ ‖W[A^σ] − W‖_p, where W[A] is the step graphon with
/// value A_ij on the cell [i/n, (i+1)/n) × [j/n, (j+1)/n).
///
/// For every cell and every distinct entry value v of A the integral
/// ∫_cell |v − W|^p is computed once (exactly for step graphons), after
/// which each permutation costs O(n²) lookups.
pub fn hat_delta_p_vs_graphon(
    a: &Matrix,
    w: &Graphon,
    p: f64,
    mode: Mode,
    budget: &SearchBudget,
    quad: &QuadratureSpec,
) -> Result<Alignment> {
    check_p(p)?;
    if !w.is_unit_interval() {
        return Err(Error::Domain("matrix-to-graphon distance needs a graphon over [0,1]".into()));
    }
    w.check_integrable(p)?;
    let n = a.n();
    let mut values: Vec<f64> = a.data().to_vec();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let m = values.len();
    let index = |v: f64| values.binary_search_by(|x| x.total_cmp(&v)).expect("value of A");
    let nf = n as f64;
    let cell = |i: usize| (i as f64 / nf, if i + 1 == n { 1.0 } else { (i + 1) as f64 / nf });
    // table[(i*n + j)*m + v]
    let mut table = vec![0.0; n * n * m];
    for i in 0..n {
        for j in i..n {
            for (k, &v) in values.iter().enumerate() {
                let e = w.integrate_unit(&|x| (v - x).abs().powf(p), &[v], cell(i), cell(j), quad)?;
                table[(i * n + j) * m + k] = e.value;
                table[(j * n + i) * m + k] = e.value;
            }
        }
    }
    let idx: Vec<usize> = a.data().iter().map(|&v| index(v)).collect();
    let cost = |i: usize, j: usize, si: usize, sj: usize| table[(i * n + j) * m + idx[si * n + sj]];
    let degree_start = || {
        // W's degrees on the grid cells stand in for B's degrees
        let d: Vec<f64> = (0..n)
            .map(|i| {
                w.integrate_unit(&|x| x, &[], cell(i), (0.0, 1.0), quad)
                    .map(|e| e.value)
                    .unwrap_or(0.0)
            })
            .collect();
        degree_alignment(a, &d)
    };
    let (total, sigma) = cellwise_search(n, mode, budget, degree_start, cost)?;
    Ok(Alignment {
        value: total.max(0.0).powf(1.0 / p),
        sigma,
        mode,
        bounds_caveat: caveat(mode),
    })
}

/// ‖A − B‖_p without relabeling.
pub fn lp_distance(a: &Matrix, b: &Matrix, p: f64) -> Result<f64> {
    check_p(p)?;
    Ok(matrix_lp(&a.sub(b)?, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphon::BlockModel;
    use crate::metrics::norms::tests::brute_cut;
    use crate::rng::Stream;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn budget() -> SearchBudget {
        SearchBudget {
            restarts: 4,
            max_iters: 10_000,
            seed: 3,
        }
    }

    fn random_sym(n: usize, seed: u64) -> Matrix {
        let mut rng = stream_rng(seed, Stream::Trial);
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                let v = if rng.random::<bool>() { 1.0 } else { 0.0 };
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        m
    }

    fn all_perms(n: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut p: Vec<usize> = (0..n).collect();
        out.push(p.clone());
        while next_permutation(&mut p) {
            out.push(p.clone());
        }
        out
    }

    #[test]
    fn permutation_count() {
        assert_eq!(all_perms(5).len(), 120);
        assert_eq!(all_perms(1).len(), 1);
    }

    #[test]
    fn self_distance_is_zero() {
        let a = random_sym(6, 1);
        let r = hat_delta_p(&a, &a, 1.0, Mode::Exact, &budget()).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.sigma, (0..6).collect::<Vec<_>>());
        let sigma = vec![3, 0, 5, 1, 4, 2];
        let b = a.permuted(&sigma);
        assert_eq!(hat_delta_p(&b, &a, 2.0, Mode::Exact, &budget()).unwrap().value, 0.0);
        assert_eq!(hat_delta_cut(&b, &a, Mode::Exact, &budget()).unwrap().value, 0.0);
        assert_eq!(hat_delta_p(&b, &a, 1.0, Mode::Heuristic, &budget()).unwrap().value, 0.0);
    }

    #[test]
    fn two_vertex_example() {
        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let r = hat_delta_p(&a, &Matrix::zeros(2), 1.0, Mode::Exact, &budget()).unwrap();
        assert_eq!(r.value, 0.5);
    }

    #[test]
    fn cut_distance_matches_double_enumeration() {
        for seed in 0..3 {
            let a = random_sym(6, 10 + seed);
            let b = random_sym(6, 20 + seed);
            let brute = all_perms(6)
                .iter()
                .map(|s| brute_cut(&a.permuted(s).sub(&b).unwrap()))
                .fold(f64::INFINITY, f64::min);
            let r = hat_delta_cut(&a, &b, Mode::Exact, &budget()).unwrap();
            assert_relative_eq!(r.value, brute, epsilon = 1e-12);
        }
    }

    #[test]
    fn heuristic_is_an_upper_bound() {
        for seed in 0..5 {
            let a = random_sym(7, 30 + seed);
            let b = random_sym(7, 40 + seed);
            let e = hat_delta_p(&a, &b, 1.0, Mode::Exact, &budget()).unwrap().value;
            let h = hat_delta_p(&a, &b, 1.0, Mode::Heuristic, &budget()).unwrap().value;
            assert!(h >= e - 1e-12);
        }
    }

    #[test]
    fn exact_size_limit() {
        let a = Matrix::zeros(10);
        assert!(matches!(
            hat_delta_p(&a, &a, 1.0, Mode::Exact, &budget()),
            Err(Error::Size { .. })
        ));
        assert!(hat_delta_p(&a, &Matrix::zeros(9), 1.0, Mode::Exact, &budget()).is_err());
    }

    #[test]
    fn graphon_distance_examples() {
        let q = QuadratureSpec::default();
        // W[A] against A itself
        let a = random_sym(5, 7);
        let rows: Vec<Vec<f64>> = (0..5).map(|i| a.row(i).to_vec()).collect();
        let w = Graphon::Step(BlockModel::uniform(&rows).unwrap());
        let r = hat_delta_p_vs_graphon(&a, &w, 1.0, Mode::Exact, &budget(), &q).unwrap();
        assert_eq!(r.value, 0.0);
        // zero matrix against a constant
        let c = Graphon::constant(0.4).unwrap();
        let r = hat_delta_p_vs_graphon(&Matrix::zeros(4), &c, 1.0, Mode::Exact, &budget(), &q).unwrap();
        assert_relative_eq!(r.value, 0.4, epsilon = 1e-15);
    }

    #[test]
    fn graphon_distance_with_offset_blocks() {
        // two blocks {0,1},{2,3} of a 4-vertex A against a step graphon whose
        // boundary sits at 0.3; cellwise oracle over all 24 permutations
        let a = Matrix::from_rows(&[
            vec![0.0, 1.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ])
        .unwrap();
        let m = BlockModel::from_upper(vec![0.3, 0.7], &[1.0, 0.0, 1.0]).unwrap();
        let w = Graphon::Step(m.clone());
        let q = QuadratureSpec::default();
        let r = hat_delta_p_vs_graphon(&a, &w, 1.0, Mode::Exact, &budget(), &q).unwrap();
        let overlap = |lo: f64, hi: f64, b: usize| {
            let (l, h) = if b == 0 { (0.0, 0.3) } else { (0.3, 1.0) };
            (hi.min(h) - lo.max(l)).max(0.0)
        };
        let oracle = all_perms(4)
            .iter()
            .map(|s| {
                let mut t = 0.0;
                for i in 0..4 {
                    for j in 0..4 {
                        let v = a.get(s[i], s[j]);
                        let (xi, xj) = (i as f64 / 4.0, j as f64 / 4.0);
                        for bi in 0..2 {
                            for bj in 0..2 {
                                t += overlap(xi, xi + 0.25, bi) * overlap(xj, xj + 0.25, bj) * (v - m.b(bi, bj)).abs();
                            }
                        }
                    }
                }
                t
            })
            .fold(f64::INFINITY, f64::min);
        assert!(r.value > 0.0);
        assert_relative_eq!(r.value, oracle, epsilon = 1e-12);
    }

    #[test]
    fn graphon_distance_rejects_simplex() {
        let mm = Graphon::mixed_membership(vec![1.0, 1.0], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let r = hat_delta_p_vs_graphon(&Matrix::zeros(3), &mm, 1.0, Mode::Exact, &budget(), &QuadratureSpec::default());
        assert!(matches!(r, Err(Error::Domain(_))));
    }
}
