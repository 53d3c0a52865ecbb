use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{stream_rng, Stream};

/// Largest n for which `cut_norm_exact` enumerates all 2^n row sets.
pub const EXACT_CUT_MAX_N: usize = 24;

/// ‖A‖_p = (n⁻² Σ |A_ij|^p)^{1/p}.
pub fn matrix_lp(a: &Matrix, p: f64) -> f64 {
    let n = a.n() as f64;
    let s: f64 = if p == 1.0 {
        a.data().iter().map(|v| v.abs()).sum()
    } else if p == 2.0 {
        a.data().iter().map(|v| v * v).sum()
    } else {
        a.data().iter().map(|v| v.abs().powf(p)).sum()
    };
    (s / (n * n)).powf(1.0 / p)
}

/// A cut norm value with the (S, T) pair attaining it (0-based, sorted).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub value: f64,
    pub s: Vec<usize>,
    pub t: Vec<usize>,
}

fn members(mask: u64, n: usize) -> Vec<usize> {
    (0..n).filter(|&i| mask >> i & 1 == 1).collect()
}

/// Best T for fixed column sums: the positive or the negative part.
fn best_t(col: &[f64]) -> (f64, bool) {
    let (mut pos, mut neg) = (0.0, 0.0);
    for &c in col {
        if c > 0.0 {
            pos += c;
        } else {
            neg -= c;
        }
    }
    if neg > pos {
        (neg, false)
    } else {
        (pos, true)
    }
}

/// ‖A‖_□ = max_{S,T} n⁻² |Σ_{S×T} A_ij|, exactly.
///
/// All 2^n row sets S are visited in Gray-code order with the column sums
/// c_j = Σ_{i∈S} A_ij updated incrementally; for fixed S the optimal T is
/// {j : c_j > 0} or {j : c_j < 0}. Ties keep the first S visited.
pub fn cut_norm_exact(a: &Matrix) -> Result<Cut> {
    let n = a.n();
    if n > EXACT_CUT_MAX_N {
        return Err(Error::Size {
            what: "exact cut norm",
            n,
            max: EXACT_CUT_MAX_N,
            hint: "use the heuristic lower bound (cut_norm_lower / --mode heuristic)",
        });
    }
    let mut col = vec![0.0; n];
    let mut best = (0.0, 0u64, true);
    let mut mask = 0u64;
    for step in 1u64..(1u64 << n) {
        let bit = step.trailing_zeros() as usize;
        mask ^= 1 << bit;
        let row = a.row(bit);
        if mask >> bit & 1 == 1 {
            col.iter_mut().zip(row).for_each(|(c, v)| *c += v);
        } else {
            col.iter_mut().zip(row).for_each(|(c, v)| *c -= v);
        }
        let (v, positive) = best_t(&col);
        if v > best.0 {
            best = (v, mask, positive);
        }
    }
    let (v, mask, positive) = best;
    if v == 0.0 {
        return Ok(Cut {
            value: 0.0,
            s: Vec::new(),
            t: Vec::new(),
        });
    }
    // recompute exactly for the winning S
    let s = members(mask, n);
    let col: Vec<f64> = (0..n).map(|j| s.iter().map(|&i| a.get(i, j)).sum()).collect();
    let t: Vec<usize> = (0..n)
        .filter(|&j| if positive { col[j] > 0.0 } else { col[j] < 0.0 })
        .collect();
    let total: f64 = t.iter().map(|&j| col[j]).sum();
    let nf = n as f64;
    Ok(Cut {
        value: total.abs() / (nf * nf),
        s,
        t,
    })
}

fn block_sum(a: &Matrix, s: &[bool], t: &[bool]) -> f64 {
    let n = a.n();
    let mut total = 0.0;
    for i in (0..n).filter(|&i| s[i]) {
        let row = a.row(i);
        total += (0..n).filter(|&j| t[j]).map(|j| row[j]).sum::<f64>();
    }
    total
}

/// Alternating maximization from a starting S for one sign of the sum.
fn alternate(a: &Matrix, start: Vec<bool>, sign: f64) -> (f64, Vec<bool>, Vec<bool>) {
    let n = a.n();
    let mut s = start;
    let mut best = (f64::NEG_INFINITY, Vec::new(), Vec::new());
    loop {
        let col: Vec<f64> = (0..n)
            .map(|j| (0..n).filter(|&i| s[i]).map(|i| a.get(i, j)).sum::<f64>())
            .collect();
        let t: Vec<bool> = col.iter().map(|&c| sign * c > 0.0).collect();
        let row: Vec<f64> = (0..n)
            .map(|i| (0..n).filter(|&j| t[j]).map(|j| a.get(i, j)).sum::<f64>())
            .collect();
        let next: Vec<bool> = row.iter().map(|&r| sign * r > 0.0).collect();
        let v = sign * block_sum(a, &next, &t);
        if v <= best.0 {
            break;
        }
        best = (v, next.clone(), t);
        s = next;
    }
    (best.0.max(0.0), best.1, best.2)
}

/// Singleton starts are limited to this many rows (largest |row sum| first).
const SINGLETON_STARTS: usize = 32;

/// A feasible (S, T) pair found by alternating S/T improvement from the
/// full set, singletons of the heaviest rows and `restarts` random starts,
/// for both signs. The value is a lower bound on ‖A‖_□.
pub fn cut_norm_lower(a: &Matrix, restarts: usize, seed: u64) -> Cut {
    cut_lower_with(a, restarts, seed, true)
}

/// `cut_norm_lower` with the n singleton starts optional.
pub(crate) fn cut_lower_with(a: &Matrix, restarts: usize, seed: u64, singletons: bool) -> Cut {
    let n = a.n();
    let mut rng = stream_rng(seed, Stream::Restart);
    let mut best = (0.0, vec![false; n], vec![false; n]);
    let mut starts = vec![vec![true; n]];
    if singletons {
        let sums: Vec<f64> = (0..n).map(|i| a.row(i).iter().sum::<f64>().abs()).collect();
        let mut rows: Vec<usize> = (0..n).collect();
        rows.sort_by(|&i, &j| sums[j].total_cmp(&sums[i]).then(i.cmp(&j)));
        rows.truncate(SINGLETON_STARTS);
        rows.sort_unstable();
        for i in rows {
            let mut e = vec![false; n];
            e[i] = true;
            starts.push(e);
        }
    }
    for _ in 0..restarts {
        starts.push((0..n).map(|_| rng.random::<bool>()).collect());
    }
    for s in starts {
        for sign in [1.0, -1.0] {
            let (v, s2, t2) = alternate(a, s.clone(), sign);
            if v > best.0 {
                best = (v, s2, t2);
            }
        }
    }
    let nf = n as f64;
    let (v, s, t) = best;
    let pick = |m: &[bool]| (0..n).filter(|&i| m[i]).collect::<Vec<_>>();
    if v == 0.0 {
        return Cut {
            value: 0.0,
            s: Vec::new(),
            t: Vec::new(),
        };
    }
    Cut {
        value: v / (nf * nf),
        s: pick(&s),
        t: pick(&t),
    }
}

/// Exact cut norm when n is small enough, the heuristic bound otherwise.
/// The flag tells which one was used.
pub fn cut_norm_auto(a: &Matrix, restarts: usize, seed: u64) -> (Cut, bool) {
    match cut_norm_exact(a) {
        Ok(c) => (c, true),
        Err(_) => (cut_norm_lower(a, restarts, seed), false),
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// max over all 4^n (S, T) pairs.
    pub(crate) fn brute_cut(a: &Matrix) -> f64 {
        let n = a.n();
        let mut best: f64 = 0.0;
        for s in 0u64..(1 << n) {
            for t in 0u64..(1 << n) {
                let mut total = 0.0;
                for i in members(s, n) {
                    for j in members(t, n) {
                        total += a.get(i, j);
                    }
                }
                best = best.max(total.abs());
            }
        }
        best / (n * n) as f64
    }

    #[test]
    fn lp_examples() {
        assert_eq!(matrix_lp(&Matrix::zeros(3), 1.0), 0.0);
        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(matrix_lp(&a, 1.0), 0.5);
        assert_relative_eq!(matrix_lp(&a, 2.0), 0.5f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(matrix_lp(&a, 3.0), 0.5f64.powf(1.0 / 3.0), epsilon = 1e-15);
    }

    #[test]
    fn cut_examples() {
        let z = cut_norm_exact(&Matrix::zeros(4)).unwrap();
        assert_eq!((z.value, z.s.len(), z.t.len()), (0.0, 0, 0));
        let ones = Matrix::from_fn(5, |_, _| 1.0);
        let c = cut_norm_exact(&ones).unwrap();
        assert_eq!(c.value, 1.0);
        assert_eq!(c.s, vec![0, 1, 2, 3, 4]);
        assert_eq!(c.t, vec![0, 1, 2, 3, 4]);
        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let c = cut_norm_exact(&a).unwrap();
        assert_eq!(c.value, 0.5);
        assert_eq!(brute_cut(&a), 0.5);
        assert_eq!((c.s, c.t), (vec![0, 1], vec![0, 1]));
    }

    #[test]
    fn negative_branch() {
        let a = Matrix::from_rows(&[vec![-1.0, -1.0], vec![0.5, -1.0]]).unwrap();
        let c = cut_norm_exact(&a).unwrap();
        assert_eq!(c.value, brute_cut(&a));
        assert_eq!(c.value, 0.625);
    }

    #[test]
    fn size_limit() {
        let a = Matrix::zeros(EXACT_CUT_MAX_N + 1);
        assert!(matches!(cut_norm_exact(&a), Err(Error::Size { .. })));
    }

    #[test]
    fn lower_bound_examples() {
        let ones = Matrix::from_fn(6, |_, _| 1.0);
        assert_eq!(cut_norm_lower(&ones, 0, 0).value, 1.0);
        let mut rng = stream_rng(42, Stream::Trial);
        let mut hits = 0;
        for seed in 0..100 {
            let a = Matrix::from_fn(8, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 });
            let exact = cut_norm_exact(&a).unwrap().value;
            let low = cut_norm_lower(&a, 8, seed).value;
            assert!(low <= exact + 1e-12);
            if (low - exact).abs() <= 1e-12 {
                hits += 1;
            }
        }
        assert!(hits >= 95, "{hits}");
    }
}
