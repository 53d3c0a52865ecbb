use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// A map [n] → [k]. Classes may be empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    k: usize,
    assign: Vec<usize>,
}

impl Partition {
    pub fn new(assign: Vec<usize>, k: usize) -> Result<Self> {
        if let Some(&bad) = assign.iter().find(|&&c| c >= k) {
            return Err(Error::Parameter(format!("class label {bad} out of range for k = {k}")));
        }
        Ok(Partition { k, assign })
    }

    /// k = 1 + the largest label.
    pub fn from_assignment(assign: Vec<usize>) -> Self {
        let k = assign.iter().max().map_or(0, |m| m + 1);
        Partition { k, assign }
    }

    pub fn trivial(n: usize) -> Self {
        Partition {
            k: usize::from(n > 0),
            assign: vec![0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.assign.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn assign(&self) -> &[usize] {
        &self.assign
    }

    pub fn class_of(&self, i: usize) -> usize {
        self.assign[i]
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &c in &self.assign {
            s[c] += 1;
        }
        s
    }

    pub fn classes(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &c) in self.assign.iter().enumerate() {
            out[c].push(i);
        }
        out
    }

    pub fn nonempty_classes(&self) -> usize {
        self.sizes().iter().filter(|&&s| s > 0).count()
    }

    /// Smallest size among non-empty classes (0 for n = 0).
    pub fn min_nonempty_size(&self) -> usize {
        self.sizes().into_iter().filter(|&s| s > 0).min().unwrap_or(0)
    }

    /// Relabel classes in order of first appearance (restricted growth form)
    /// and drop empty ones.
    pub fn canonical(&self) -> Partition {
        let mut map = vec![usize::MAX; self.k];
        let mut next = 0;
        let assign = self
            .assign
            .iter()
            .map(|&c| {
                if map[c] == usize::MAX {
                    map[c] = next;
                    next += 1;
                }
                map[c]
            })
            .collect();
        Partition { k: next, assign }
    }

    /// Drop empty classes, keeping the relative order of the others.
    pub fn without_empty_classes(&self) -> Partition {
        let sizes = self.sizes();
        let mut map = vec![0; self.k];
        let mut next = 0;
        for c in 0..self.k {
            if sizes[c] > 0 {
                map[c] = next;
                next += 1;
            }
        }
        Partition {
            k: next,
            assign: self.assign.iter().map(|&c| map[c]).collect(),
        }
    }

    /// Every non-empty class has at least `min_size` members and at most
    /// `max_classes` classes are non-empty.
    pub fn satisfies(&self, min_size: usize, max_classes: usize) -> bool {
        let sizes = self.sizes();
        sizes.iter().all(|&s| s == 0 || s >= min_size) && sizes.iter().filter(|&&s| s > 0).count() <= max_classes
    }
}

/// Minimum class size ⌊κn⌋ and class count ⌈n/⌊κn⌋⌉ for the κ-constrained
/// estimators.
pub fn kappa_rule(n: usize, kappa: f64) -> Result<(usize, usize)> {
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::Parameter(format!("kappa must lie in (0, 1], got {kappa}")));
    }
    let x = kappa * n as f64;
    let min_size = if (x - x.round()).abs() <= 1e-9 { x.round() } else { x.floor() } as usize;
    if min_size < 1 {
        return Err(Error::Parameter(format!(
            "kappa * n = {x} < 1; the estimator needs at least one vertex per class"
        )));
    }
    Ok((min_size, n.div_ceil(min_size)))
}

/// Block sums S_ab = Σ_{i∈V_a, j∈V_b} A_ij.
pub(crate) fn block_sums(a: &Matrix, pi: &Partition) -> Vec<f64> {
    let k = pi.k();
    let mut s = vec![0.0; k * k];
    let assign = pi.assign();
    for i in 0..a.n() {
        let ci = assign[i];
        for (j, &v) in a.row(i).iter().enumerate() {
            s[ci * k + assign[j]] += v;
        }
    }
    s
}

/// A/π: k×k matrix of block means, 0 where either class is empty. Diagonal
/// blocks average over all of V_a×V_a.
pub(crate) fn block_means(a: &Matrix, pi: &Partition) -> Result<Matrix> {
    if a.n() != pi.n() {
        return Err(Error::Mismatch(format!(
            "matrix has n = {}, partition has n = {}",
            a.n(),
            pi.n()
        )));
    }
    let k = pi.k();
    let s = block_sums(a, pi);
    let sizes = pi.sizes();
    Ok(Matrix::from_fn(k, |x, y| {
        let (lo, hi) = (x.min(y), x.max(y));
        let m = sizes[lo] * sizes[hi];
        if m == 0 {
            0.0
        } else {
            // upper triangle value on both sides keeps B exactly symmetric
            s[lo * k + hi] / m as f64
        }
    }))
}

/// B^π: the n×n matrix with entry B_{π(i)π(j)}.
pub fn lifted(b: &Matrix, pi: &Partition) -> Matrix {
    let assign = pi.assign();
    Matrix::from_fn(pi.n(), |i, j| b.get(assign[i], assign[j]))
}

/// (A/π, A_π).
pub fn block_average(a: &Matrix, pi: &Partition) -> Result<(Matrix, Matrix)> {
    let b = block_means(a, pi)?;
    let l = lifted(&b, pi);
    Ok((b, l))
}

/// Visit, in lexicographic order of restricted-growth assignment vectors,
/// every partition of [n] into at most `max_classes` classes each of size
/// at least `min_size`.
pub fn for_each_constrained_partition(
    n: usize,
    min_size: usize,
    max_classes: usize,
    f: &mut dyn FnMut(&[usize], usize),
) {
    struct State<'a> {
        n: usize,
        min: usize,
        max_classes: usize,
        labels: Vec<usize>,
        sizes: Vec<usize>,
        f: &'a mut dyn FnMut(&[usize], usize),
    }
    fn rec(st: &mut State, pos: usize) {
        let deficit: usize = st.sizes.iter().map(|&s| st.min.saturating_sub(s)).sum();
        if deficit > st.n - pos {
            return;
        }
        if pos == st.n {
            let k = st.sizes.len();
            (st.f)(&st.labels, k);
            return;
        }
        let groups = st.sizes.len();
        for g in 0..=groups {
            if g == groups {
                if groups == st.max_classes {
                    break;
                }
                st.sizes.push(0);
            }
            st.sizes[g] += 1;
            st.labels.push(g);
            rec(st, pos + 1);
            st.labels.pop();
            st.sizes[g] -= 1;
            if g == groups {
                st.sizes.pop();
            }
        }
    }
    let mut st = State {
        n,
        min: min_size,
        max_classes,
        labels: Vec::with_capacity(n),
        sizes: Vec::new(),
        f,
    };
    rec(&mut st, 0);
}
