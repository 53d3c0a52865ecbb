//! Upper bounds on the distance from a step graphon to the block models whose
//! blocks all have mass at least κ, and the grid rounding of such models.
//!
//! A candidate target is described by a fractional assignment ν of source
//! blocks to target blocks (row sums p_i, column sums q_a ≥ κ). Given ν the
//! best target values are the weighted L^p centers of B over each target
//! cell, and ν itself is a coupling between W and the resulting block model,
//! so every evaluated ν certifies an upper bound.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use super::BlockModel;
use crate::error::{Error, Result};
use crate::rng::{child_seed, stream_rng, Stream};
use crate::SearchBudget;

/// Source-block count up to which all merge patterns are enumerated.
const EXHAUSTIVE_BLOCKS: usize = 8;
/// Number of best merge patterns refined by local search.
const MERGE_STARTS: usize = 3;
/// Step sizes tried by the local search, as fractions of a block's mass.
const STEP_LEVELS: u32 = 12;
/// Largest m for which κ = 1/m is a homotopy stage.
const MAX_STAGES: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleBound {
    pub upper: f64,
    pub certificate: BlockModel,
    /// True when `upper` is the exact oracle error (only when it is 0).
    pub exact: bool,
}

struct Problem<'a> {
    w: &'a BlockModel,
    p: f64,
    kappa: f64,
    kmax: usize,
}

/// Fractional assignment, row-major `k × kt`.
#[derive(Clone)]
struct Assignment {
    kt: usize,
    nu: Vec<f64>,
}

impl Assignment {
    fn col(&self, k: usize, a: usize) -> f64 {
        (0..k).map(|i| self.nu[i * self.kt + a]).sum()
    }
}

/// argmin_v Σ w_i |x_i − v|^p and the attained value.
pub(crate) fn weighted_center(pairs: &mut [(f64, f64)], p: f64) -> (f64, f64) {
    let total: f64 = pairs.iter().map(|&(_, w)| w).sum();
    if total <= 0.0 {
        return (0.0, 0.0);
    }
    let cost = |v: f64, pairs: &[(f64, f64)]| pairs.iter().map(|&(x, w)| w * (x - v).abs().powf(p)).sum::<f64>();
    if p == 1.0 {
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut acc = 0.0;
        for &(x, w) in pairs.iter() {
            acc += w;
            if acc >= 0.5 * total {
                let c = pairs.iter().map(|&(y, w)| w * (y - x).abs()).sum();
                return (x, c);
            }
        }
        let x = pairs.last().unwrap().0;
        return (x, cost(x, pairs));
    }
    if p == 2.0 {
        let mean = pairs.iter().map(|&(x, w)| w * x).sum::<f64>() / total;
        return (mean, cost(mean, pairs));
    }
    // convex in v: golden-section search on [min, max]
    let (mut lo, mut hi) = pairs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &(x, _)| (l.min(x), h.max(x)));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = hi - phi * (hi - lo);
    let mut b = lo + phi * (hi - lo);
    let (mut fa, mut fb) = (cost(a, pairs), cost(b, pairs));
    while hi - lo > 1e-12 * (1.0 + hi.abs()) {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - phi * (hi - lo);
            fa = cost(a, pairs);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + phi * (hi - lo);
            fb = cost(b, pairs);
        }
    }
    let v = 0.5 * (lo + hi);
    (v, cost(v, pairs))
}

impl Problem<'_> {
    fn k(&self) -> usize {
        self.w.k()
    }

    /// Σ over target cells of the best attainable Σ ν ν |B − C|^p, with C.
    fn evaluate(&self, a: &Assignment) -> (f64, Vec<f64>) {
        let (k, kt) = (self.k(), a.kt);
        let mut c = vec![0.0; kt * kt];
        let mut total = 0.0;
        let mut pairs = Vec::with_capacity(k * k);
        for s in 0..kt {
            for t in s..kt {
                pairs.clear();
                for i in 0..k {
                    let ni = a.nu[i * kt + s];
                    if ni == 0.0 {
                        continue;
                    }
                    for j in 0..k {
                        let nj = a.nu[j * kt + t];
                        if nj > 0.0 {
                            pairs.push((self.w.b(i, j), ni * nj));
                        }
                    }
                }
                let (v, cost) = weighted_center(&mut pairs, self.p);
                c[s * kt + t] = v;
                c[t * kt + s] = v;
                total += if s == t { cost } else { 2.0 * cost };
            }
        }
        (total.max(0.0), c)
    }

    fn feasible(&self, a: &Assignment) -> bool {
        (0..a.kt).all(|t| a.col(self.k(), t) >= self.kappa - 1e-12)
    }

    /// Pattern search over single-source mass transfers between targets.
    fn refine(&self, start: Assignment, max_iters: usize) -> (f64, Assignment) {
        let (k, kt) = (self.k(), start.kt);
        let mut cur = start;
        let (mut best, _) = self.evaluate(&cur);
        let mut iters = 0;
        for level in 0..STEP_LEVELS {
            let frac = 0.5f64.powi(level as i32);
            let mut improved = true;
            while improved && iters < max_iters {
                improved = false;
                for i in 0..k {
                    for from in 0..kt {
                        for to in 0..kt {
                            if from == to {
                                continue;
                            }
                            let have = cur.nu[i * kt + from];
                            let slack = cur.col(k, from) - self.kappa;
                            let delta = have.min(frac * self.w.p()[i]).min(slack);
                            if !(delta > 1e-15) {
                                continue;
                            }
                            let mut next = cur.clone();
                            next.nu[i * kt + from] -= delta;
                            next.nu[i * kt + to] += delta;
                            let (v, _) = self.evaluate(&next);
                            if v < best * (1.0 - 1e-12) - 1e-15 {
                                best = v;
                                cur = next;
                                improved = true;
                                iters += 1;
                            }
                        }
                    }
                }
            }
        }
        (best, cur)
    }

    /// Sources laid out in `order` along [0,1], cut into `kt` equal targets.
    fn interval_start(&self, order: &[usize], kt: usize) -> Assignment {
        let kk = self.k();
        let mut nu = vec![0.0; kk * kt];
        let mut pos = 0.0;
        for &i in order {
            let (lo, hi) = (pos, pos + self.w.p()[i]);
            for t in 0..kt {
                let (a, b) = (t as f64 / kt as f64, (t + 1) as f64 / kt as f64);
                let overlap = (hi.min(b) - lo.max(a)).max(0.0);
                nu[i * kt + t] = overlap;
            }
            pos = hi;
        }
        // put any rounding remainder back on the source rows
        for &i in order {
            let row: f64 = nu[i * kt..(i + 1) * kt].iter().sum();
            let diff = self.w.p()[i] - row;
            if diff != 0.0 {
                let t = (0..kt)
                    .max_by(|&a, &b| nu[i * kt + a].total_cmp(&nu[i * kt + b]))
                    .unwrap();
                nu[i * kt + t] = (nu[i * kt + t] + diff).max(0.0);
            }
        }
        Assignment { kt, nu }
    }

    fn merge_start(&self, labels: &[usize], groups: usize) -> Assignment {
        let k = self.k();
        let mut nu = vec![0.0; k * groups];
        for i in 0..k {
            nu[i * groups + labels[i]] = self.w.p()[i];
        }
        Assignment { kt: groups, nu }
    }

    fn starts(&self, budget: &SearchBudget) -> Vec<Assignment> {
        let k = self.k();
        let mut out = Vec::new();
        let natural: Vec<usize> = (0..k).collect();
        let deg = self.w.block_degrees();
        let mut by_degree = natural.clone();
        by_degree.sort_by(|&a, &b| deg[a].total_cmp(&deg[b]).then(a.cmp(&b)));
        for kt in 1..=self.kmax {
            out.push(self.interval_start(&natural, kt));
            out.push(self.interval_start(&by_degree, kt));
        }
        let nonzero: Vec<usize> = (0..k).filter(|&i| self.w.p()[i] > 0.0).collect();
        if nonzero.len() <= EXHAUSTIVE_BLOCKS {
            let mut merges: Vec<(f64, Assignment)> = Vec::new();
            for_each_set_partition(nonzero.len(), &mut |labels, groups| {
                let mut full = vec![0; k];
                for (pos, &i) in nonzero.iter().enumerate() {
                    full[i] = labels[pos];
                }
                // zero-mass blocks ride along with group 0
                let a = self.merge_start(&full, groups);
                if self.feasible(&a) {
                    merges.push((self.evaluate(&a).0, a));
                }
            });
            merges.sort_by(|x, y| x.0.total_cmp(&y.0));
            out.extend(merges.into_iter().take(MERGE_STARTS).map(|(_, a)| a));
        }
        let mut rng = stream_rng(budget.seed, Stream::Restart);
        for _ in 0..budget.restarts {
            let mut order = natural.clone();
            order.shuffle(&mut rng);
            let kt = rng.random_range(1..=self.kmax);
            out.push(self.interval_start(&order, kt));
        }
        out
    }

    fn search(&self, budget: &SearchBudget, warm: Option<&Assignment>) -> (f64, Assignment) {
        let mut best: Option<(f64, Assignment)> = warm.map(|a| (self.evaluate(a).0, a.clone()));
        for start in self.starts(budget) {
            if !self.feasible(&start) {
                continue;
            }
            let (v, a) = self.refine(start, budget.max_iters);
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                best = Some((v, a));
            }
        }
        if let Some(w) = warm {
            let (v, a) = self.refine(w.clone(), budget.max_iters);
            if v < best.as_ref().unwrap().0 {
                best = Some((v, a));
            }
        }
        best.expect("the single-block start is always feasible")
    }
}

/// Visit every set partition of `n` items in restricted-growth form.
pub(crate) fn for_each_set_partition(n: usize, f: &mut dyn FnMut(&[usize], usize)) {
    fn rec(pos: usize, labels: &mut Vec<usize>, groups: usize, n: usize, f: &mut dyn FnMut(&[usize], usize)) {
        if pos == n {
            f(labels, groups);
            return;
        }
        for g in 0..=groups {
            labels.push(g);
            rec(pos + 1, labels, groups.max(g + 1), n, f);
            labels.pop();
        }
    }
    if n == 0 {
        f(&[], 0);
        return;
    }
    let mut labels = Vec::with_capacity(n);
    rec(0, &mut labels, 0, n, f);
}

/// Upper bound on the L^p distance from `w` to the nearest block model with
/// all masses ≥ κ, with the block model attaining it.
///
/// The search runs a homotopy over κ = 1, 1/2, 1/3, ... down to the
/// requested value, warm-starting each stage from the previous optimum, so
/// for κ on that grid the bound never increases as κ decreases.
pub fn oracle_error_step(w: &BlockModel, kappa: f64, p: f64, budget: &SearchBudget) -> Result<OracleBound> {
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::Parameter(format!("κ must lie in (0,1], got {kappa}")));
    }
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Parameter(format!("p must be a finite value >= 1, got {p}")));
    }
    let trimmed = w.without_empty_blocks();
    if trimmed.min_mass() >= kappa {
        return Ok(OracleBound {
            upper: 0.0,
            certificate: trimmed,
            exact: true,
        });
    }
    let mut stages: Vec<f64> = (1..=MAX_STAGES).map(|m| 1.0 / m as f64).filter(|&s| s > kappa).collect();
    stages.push(kappa);
    let mut warm: Option<Assignment> = None;
    let mut best = (f64::INFINITY, Vec::new(), 0);
    for (idx, &stage) in stages.iter().enumerate() {
        let prob = Problem {
            w: &trimmed,
            p,
            kappa: stage,
            kmax: ((1.0 / stage + 1e-9).floor() as usize).clamp(1, trimmed.k()),
        };
        let stage_budget = SearchBudget {
            seed: child_seed(budget.seed, idx as u64),
            ..*budget
        };
        let (v, a) = prob.search(&stage_budget, warm.as_ref());
        let (_, c) = prob.evaluate(&a);
        best = (v, c, a.kt);
        warm = Some(a);
    }
    let a = warm.unwrap();
    let k = trimmed.k();
    let q: Vec<f64> = (0..a.kt).map(|t| a.col(k, t)).collect();
    let total: f64 = q.iter().sum();
    let q = q.iter().map(|x| x / total).collect();
    let certificate = BlockModel::from_flat(q, best.1)?;
    Ok(OracleBound {
        upper: best.0.powf(1.0 / p),
        certificate,
        exact: false,
    })
}

/// Round a block model in B_{≥κ} to masses on the grid (1/n)ℤ.
///
/// Blocks are laid out in increasing order of mass; each cumulative mass is
/// rounded to the nearest multiple of 1/n (ties to the left). Every rounded
/// mass is then checked against the floor ⌊κn⌋/n. The returned model keeps
/// the input's block order and drops zero-mass blocks.
pub fn round_to_grid(w: &BlockModel, n: usize, kappa: f64) -> Result<BlockModel> {
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::Construction(format!("κ must lie in (0,1], got {kappa}")));
    }
    if (n as f64) * kappa < 1.0 {
        return Err(Error::Construction(format!("need nκ ≥ 1, got n = {n}, κ = {kappa}")));
    }
    let w = w.without_empty_blocks();
    let k = w.k();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| w.p()[a].total_cmp(&w.p()[b]).then(a.cmp(&b)));
    let nf = n as f64;
    let mut counts = vec![0usize; k];
    let (mut acc, mut prev) = (0.0, 0usize);
    for (pos, &i) in order.iter().enumerate() {
        acc += w.p()[i];
        let m = if pos + 1 == k {
            n
        } else {
            let x = acc * nf;
            let r = x.round();
            if (x - r).abs() < 1e-9 {
                r as usize
            } else {
                (x - 0.5).ceil() as usize
            }
        };
        counts[i] = m.saturating_sub(prev);
        prev = m.max(prev);
    }
    let floor = (kappa * nf + 1e-9).floor() as usize;
    if let Some(i) = (0..k).find(|&i| counts[i] < floor) {
        return Err(Error::Construction(format!(
            "block {i} with mass {} rounds to {}/{n}, below the floor {floor}/{n}; masses after rounding: {:?}",
            w.p()[i],
            counts[i],
            counts
        )));
    }
    let p = counts.iter().map(|&c| c as f64 / nf).collect();
    BlockModel::from_flat(p, w.b_flat().to_vec())
}
