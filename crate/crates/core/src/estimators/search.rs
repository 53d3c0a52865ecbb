use rand::seq::SliceRandom;
use rand::Rng;

use crate::matrix::Matrix;
use crate::rng::{stream_rng, Stream};

/// Relative slack below which a change does not count as an improvement.
pub(crate) const IMPROVE_TOL: f64 = 1e-12;

pub(crate) fn improves(new: f64, old: f64) -> bool {
    if old.is_infinite() {
        return new < old;
    }
    new < old - IMPROVE_TOL * old.abs().max(1.0)
}

fn better(a: (f64, &[usize]), b: (f64, &[usize])) -> bool {
    improves(a.0, b.0) || (!improves(b.0, a.0) && a.1 < b.1)
}

/// Index of the best (objective, canonical assignment) pair: lowest
/// objective up to `IMPROVE_TOL`, then lexicographically smallest.
pub(crate) fn pick_best(results: &[(f64, Vec<usize>)]) -> usize {
    let mut best = 0;
    for i in 1..results.len() {
        if better((results[i].0, &results[i].1), (results[best].0, &results[best].1)) {
            best = i;
        }
    }
    best
}

/// Balanced contiguous classes over `order`.
fn blocks_over(order: &[usize], classes: usize) -> Vec<usize> {
    let n = order.len();
    let mut assign = vec![0; n];
    for (pos, &v) in order.iter().enumerate() {
        assign[v] = pos * classes / n;
    }
    assign
}

/// Feasible starting assignments: degree-sorted blocks for the largest and
/// smallest sensible class counts, then `restarts` random balanced
/// partitions. Every start has classes of size ≥ `min_size`.
///
/// An optimal least squares partition has every class below 2·min_size
/// (otherwise a class could be split without loss), so class counts are
/// drawn from ⌈n/(2m−1)⌉ ..= ⌊n/m⌋.
pub(crate) fn starts(a: &Matrix, min_size: usize, max_classes: usize, restarts: usize, seed: u64) -> Vec<Vec<usize>> {
    let n = a.n();
    let hi = (n / min_size).min(max_classes).max(1);
    let lo = n.div_ceil(2 * min_size - 1).clamp(1, hi);
    let deg = a.degrees();
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by(|&i, &j| deg[j].total_cmp(&deg[i]).then(i.cmp(&j)));
    let mut out = vec![blocks_over(&by_degree, hi)];
    if lo != hi {
        out.push(blocks_over(&by_degree, lo));
    }
    let mut rng = stream_rng(seed, Stream::Restart);
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..restarts {
        let classes = rng.random_range(lo..=hi);
        order.shuffle(&mut rng);
        out.push(blocks_over(&order, classes));
    }
    out
}

fn t(v: f64, p: usize, q: usize) -> f64 {
    if p == 0 || q == 0 {
        0.0
    } else {
        v * v / (p * q) as f64
    }
}

/// Incremental state for the least squares objective
/// ‖A − A_π‖²_F = Σ A_ij² − Σ_ab S_ab²/(n_a n_b).
pub(crate) struct LsState<'a> {
    a: &'a Matrix,
    k: usize,
    min_size: usize,
    pub(crate) assign: Vec<usize>,
    sizes: Vec<usize>,
    /// block sums, k×k
    s: Vec<f64>,
    /// r[i*k + c] = Σ_{j ∈ V_c} A_ij
    r: Vec<f64>,
    total_sq: f64,
    energy: f64,
}

impl<'a> LsState<'a> {
    pub(crate) fn new(a: &'a Matrix, assign: Vec<usize>, k: usize, min_size: usize) -> Self {
        let n = a.n();
        let mut sizes = vec![0; k];
        for &c in &assign {
            sizes[c] += 1;
        }
        let mut r = vec![0.0; n * k];
        for i in 0..n {
            for (j, &v) in a.row(i).iter().enumerate() {
                r[i * k + assign[j]] += v;
            }
        }
        let mut s = vec![0.0; k * k];
        for i in 0..n {
            for c in 0..k {
                s[assign[i] * k + c] += r[i * k + c];
            }
        }
        let total_sq = a.data().iter().map(|v| v * v).sum();
        let mut st = LsState {
            a,
            k,
            min_size,
            assign,
            sizes,
            s,
            r,
            total_sq,
            energy: 0.0,
        };
        st.energy = (0..k).flat_map(|x| (0..k).map(move |y| (x, y))).map(|(x, y)| t(st.s[x * k + y], st.sizes[x], st.sizes[y])).sum();
        st
    }

    /// ‖A − A_π‖₂ with the normalization n⁻².
    pub(crate) fn objective(&self) -> f64 {
        let n = self.a.n() as f64;
        (self.total_sq - self.energy).max(0.0).sqrt() / n
    }

    fn feasible_move(&self, i: usize, c: usize) -> bool {
        let a = self.assign[i];
        let na = self.sizes[a] - 1;
        a != c && (na == 0 || na >= self.min_size) && self.sizes[c] + 1 >= self.min_size
    }

    /// Energy gain of moving `i` to class `c` (positive = objective decreases).
    fn gain(&self, i: usize, c: usize) -> f64 {
        let k = self.k;
        let a = self.assign[i];
        let r = &self.r[i * k..(i + 1) * k];
        let d = self.a.get(i, i);
        let s = |x: usize, y: usize| self.s[x * k + y];
        let (na, nc) = (self.sizes[a], self.sizes[c]);
        let (na2, nc2) = (na - 1, nc + 1);
        let mut old = 0.0;
        let mut new = 0.0;
        for x in 0..k {
            if x == a || x == c {
                continue;
            }
            let nx = self.sizes[x];
            old += 2.0 * (t(s(a, x), na, nx) + t(s(c, x), nc, nx));
            new += 2.0 * (t(s(a, x) - r[x], na2, nx) + t(s(c, x) + r[x], nc2, nx));
        }
        old += t(s(a, a), na, na) + t(s(c, c), nc, nc) + 2.0 * t(s(a, c), na, nc);
        new += t(s(a, a) - 2.0 * r[a] + d, na2, na2)
            + t(s(c, c) + 2.0 * r[c] + d, nc2, nc2)
            + 2.0 * t(s(a, c) - r[c] + r[a] - d, na2, nc2);
        new - old
    }

    fn apply(&mut self, i: usize, c: usize, gain: f64) {
        let k = self.k;
        let a = self.assign[i];
        let d = self.a.get(i, i);
        let r: Vec<f64> = self.r[i * k..(i + 1) * k].to_vec();
        let sac = self.s[a * k + c] - r[c] + r[a] - d;
        let saa = self.s[a * k + a] - 2.0 * r[a] + d;
        let scc = self.s[c * k + c] + 2.0 * r[c] + d;
        for x in 0..k {
            if x == a || x == c {
                continue;
            }
            self.s[a * k + x] -= r[x];
            self.s[x * k + a] -= r[x];
            self.s[c * k + x] += r[x];
            self.s[x * k + c] += r[x];
        }
        self.s[a * k + a] = saa;
        self.s[c * k + c] = scc;
        self.s[a * k + c] = sac;
        self.s[c * k + a] = sac;
        self.sizes[a] -= 1;
        self.sizes[c] += 1;
        self.assign[i] = c;
        for j in 0..self.a.n() {
            let v = self.a.get(j, i);
            self.r[j * k + a] -= v;
            self.r[j * k + c] += v;
        }
        self.energy += gain;
    }

    fn tol(&self) -> f64 {
        IMPROVE_TOL * self.energy.abs().max(1.0)
    }

    /// Best-improvement single-vertex moves, then pair swaps when no single
    /// move helps, until a local optimum or `max_iters` accepted moves.
    /// Returns the objective after every accepted move.
    pub(crate) fn descend(&mut self, max_iters: usize) -> Vec<f64> {
        let n = self.a.n();
        let mut trace = Vec::new();
        let mut iters = 0;
        'outer: while iters < max_iters {
            let mut improved = false;
            for i in 0..n {
                let mut best = (self.tol(), usize::MAX);
                for c in 0..self.k {
                    if self.feasible_move(i, c) {
                        let g = self.gain(i, c);
                        if g > best.0 {
                            best = (g, c);
                        }
                    }
                }
                if best.1 != usize::MAX {
                    let before = self.objective();
                    self.apply(i, best.1, best.0);
                    debug_assert!(self.objective() <= before + 1e-9);
                    trace.push(self.objective());
                    improved = true;
                    iters += 1;
                    if iters >= max_iters {
                        break 'outer;
                    }
                }
            }
            if !improved && !self.swap_pass(&mut trace, &mut iters, max_iters) {
                break;
            }
        }
        trace
    }

    /// One sweep over vertex pairs in different classes, applying every
    /// improving swap found. Returns whether any swap was applied.
    fn swap_pass(&mut self, trace: &mut Vec<f64>, iters: &mut usize, max_iters: usize) -> bool {
        let n = self.a.n();
        let mut swapped = false;
        for i in 0..n {
            let a = self.assign[i];
            for c in 0..self.k {
                if c == a || self.sizes[c] == 0 {
                    continue;
                }
                let g1 = self.gain(i, c);
                self.apply(i, c, g1);
                let mut best = (f64::NEG_INFINITY, usize::MAX);
                for j in 0..n {
                    if j != i && self.assign[j] == c {
                        let g2 = self.gain(j, a);
                        if g2 > best.0 {
                            best = (g2, j);
                        }
                    }
                }
                if best.1 != usize::MAX && g1 + best.0 > self.tol() {
                    self.apply(best.1, a, best.0);
                    trace.push(self.objective());
                    *iters += 1;
                    swapped = true;
                    break;
                }
                let back = self.gain(i, a);
                self.apply(i, a, back);
            }
            if *iters >= max_iters {
                break;
            }
        }
        swapped
    }
}

/// Alternating rounds: set B = A/π, move every vertex to the class whose
/// row of B best fits its row of A (squared residual, labels of the other
/// vertices held fixed), then repair classes below `min_size`. A round is
/// kept only if it lowers ‖A − A_π‖₂, so the sequence is monotone.
/// Returns the final assignment and the objective after each kept round.
pub(crate) fn alternate(a: &Matrix, mut assign: Vec<usize>, k: usize, min_size: usize, max_rounds: usize) -> (Vec<usize>, Vec<f64>) {
    let n = a.n();
    let row_sq: Vec<f64> = (0..n).map(|i| a.row(i).iter().map(|v| v * v).sum()).collect();
    let mut current = LsState::new(a, assign.clone(), k, min_size).objective();
    let mut trace = Vec::new();
    for _ in 0..max_rounds {
        let st = LsState::new(a, assign.clone(), k, min_size);
        let b: Vec<f64> = (0..k * k)
            .map(|xy| {
                let (x, y) = (xy / k, xy % k);
                let m = st.sizes[x] * st.sizes[y];
                if m == 0 { 0.0 } else { st.s[xy] / m as f64 }
            })
            .collect();
        // Σ_j (A_ij − B_{c,π(j)})² = Σ_j A_ij² − 2 Σ_x B_cx r_i(x) + Σ_x n_x B_cx²
        let cost = |i: usize, c: usize| -> f64 {
            let mut v = row_sq[i];
            for x in 0..k {
                let bcx = b[c * k + x];
                v += -2.0 * bcx * st.r[i * k + x] + st.sizes[x] as f64 * bcx * bcx;
            }
            v
        };
        let mut next = assign.clone();
        for (i, slot) in next.iter_mut().enumerate() {
            let mut best = (cost(i, assign[i]), assign[i]);
            for c in 0..k {
                let v = cost(i, c);
                if v < best.0 - IMPROVE_TOL * best.0.abs().max(1.0) {
                    best = (v, c);
                }
            }
            *slot = best.1;
        }
        repair(&mut next, k, min_size, &cost);
        if next == assign {
            break;
        }
        let v = LsState::new(a, next.clone(), k, min_size).objective();
        if !improves(v, current) {
            break;
        }
        current = v;
        assign = next;
        trace.push(v);
    }
    (assign, trace)
}

/// Fill every non-empty class below `min_size` with the vertex of a class
/// above `min_size` whose move costs least; dissolve the class into the
/// cheapest other classes when no donor exists. Stops after n moves.
fn repair(assign: &mut [usize], k: usize, min_size: usize, cost: &dyn Fn(usize, usize) -> f64) {
    let n = assign.len();
    let mut sizes = vec![0; k];
    for &c in assign.iter() {
        sizes[c] += 1;
    }
    for _ in 0..n {
        let Some(small) = (0..k).find(|&c| sizes[c] > 0 && sizes[c] < min_size) else {
            return;
        };
        let donor = (0..n)
            .filter(|&i| sizes[assign[i]] > min_size)
            .map(|i| (cost(i, small) - cost(i, assign[i]), i))
            .min_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        match donor {
            Some((_, i)) => {
                sizes[assign[i]] -= 1;
                sizes[small] += 1;
                assign[i] = small;
            }
            None => {
                for i in 0..n {
                    if assign[i] != small {
                        continue;
                    }
                    let target = (0..k)
                        .filter(|&c| c != small && sizes[c] > 0)
                        .min_by(|&x, &y| cost(i, x).total_cmp(&cost(i, y)).then(x.cmp(&y)));
                    if let Some(c) = target {
                        sizes[small] -= 1;
                        sizes[c] += 1;
                        assign[i] = c;
                    }
                }
            }
        }
    }
}

/// First-improvement local search over single-vertex moves and swaps for an
/// objective evaluated from scratch. Stops at a local optimum, after
/// `max_iters` accepted moves, or after `max_evals` evaluations.
pub(crate) fn generic_descent(
    mut assign: Vec<usize>,
    k: usize,
    min_size: usize,
    max_iters: usize,
    max_evals: usize,
    f: &dyn Fn(&[usize]) -> f64,
) -> (f64, Vec<usize>, Vec<f64>) {
    let n = assign.len();
    let mut sizes = vec![0; k];
    for &c in &assign {
        sizes[c] += 1;
    }
    let mut cur = f(&assign);
    let mut trace = Vec::new();
    let mut evals = 1;
    'outer: while trace.len() < max_iters && evals < max_evals {
        for i in 0..n {
            let a = assign[i];
            for c in 0..k {
                let na = sizes[a] - 1;
                if c == a || !(na == 0 || na >= min_size) || sizes[c] + 1 < min_size {
                    continue;
                }
                assign[i] = c;
                let v = f(&assign);
                evals += 1;
                if improves(v, cur) {
                    sizes[a] -= 1;
                    sizes[c] += 1;
                    cur = v;
                    trace.push(v);
                    continue 'outer;
                }
                assign[i] = a;
                if evals >= max_evals {
                    break 'outer;
                }
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                if assign[i] == assign[j] {
                    continue;
                }
                assign.swap(i, j);
                let v = f(&assign);
                evals += 1;
                if improves(v, cur) {
                    cur = v;
                    trace.push(v);
                    continue 'outer;
                }
                assign.swap(i, j);
                if evals >= max_evals {
                    break 'outer;
                }
            }
        }
        break;
    }
    (cur, assign, trace)
}
