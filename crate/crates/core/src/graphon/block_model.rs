use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MASS_TOL: f64 = 1e-12;

/// A block model (p, B): probability vector over `k` blocks and a symmetric
/// nonnegative `k×k` affinity matrix. As a graphon over [0,1] block `i`
/// occupies the `i`-th of `k` consecutive intervals of lengths `p_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BlockModelRepr", into = "BlockModelRepr")]
pub struct BlockModel {
    p: Vec<f64>,
    b: Vec<f64>,
}

/// On-disk form: masses plus the row-major upper triangle of B.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockModelRepr {
    pub p: Vec<f64>,
    pub b_upper: Vec<f64>,
}

impl TryFrom<BlockModelRepr> for BlockModel {
    type Error = Error;
    fn try_from(r: BlockModelRepr) -> Result<Self> {
        BlockModel::from_upper(r.p, &r.b_upper)
    }
}

impl From<BlockModel> for BlockModelRepr {
    fn from(m: BlockModel) -> Self {
        BlockModelRepr {
            b_upper: m.upper_triangle(),
            p: m.p,
        }
    }
}

impl BlockModel {
    pub fn new(p: Vec<f64>, rows: &[Vec<f64>]) -> Result<Self> {
        let k = p.len();
        if rows.len() != k || rows.iter().any(|r| r.len() != k) {
            return Err(Error::Mismatch(format!("B must be {k}x{k}")));
        }
        Self::from_flat(p, rows.iter().flatten().copied().collect())
    }

    pub fn from_flat(p: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let k = p.len();
        if k == 0 {
            return Err(Error::Parameter("block model needs at least one block".into()));
        }
        if b.len() != k * k {
            return Err(Error::Mismatch(format!("B must have {} entries", k * k)));
        }
        if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::Domain("block masses must be finite and nonnegative".into()));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::Domain(format!("block masses sum to {total}, not 1")));
        }
        for i in 0..k {
            for j in 0..k {
                let v = b[i * k + j];
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::Domain(format!("B[{i}][{j}] = {v} must be finite and nonnegative")));
                }
                if v != b[j * k + i] {
                    return Err(Error::Domain(format!("B is not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(BlockModel { p, b })
    }

    pub fn from_upper(p: Vec<f64>, upper: &[f64]) -> Result<Self> {
        let k = p.len();
        if upper.len() != k * (k + 1) / 2 {
            return Err(Error::Mismatch(format!(
                "upper triangle of a {k}x{k} matrix has {} entries, got {}",
                k * (k + 1) / 2,
                upper.len()
            )));
        }
        let mut b = vec![0.0; k * k];
        let mut it = upper.iter();
        for i in 0..k {
            for j in i..k {
                let v = *it.next().unwrap();
                b[i * k + j] = v;
                b[j * k + i] = v;
            }
        }
        Self::from_flat(p, b)
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::from_flat(vec![1.0], vec![c])
    }

    /// Equal masses `1/k`.
    pub fn uniform(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        Self::new(vec![1.0 / k as f64; k], rows)
    }

    pub fn k(&self) -> usize {
        self.p.len()
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    #[inline]
    pub fn b(&self, i: usize, j: usize) -> f64 {
        self.b[i * self.k() + j]
    }

    pub fn b_flat(&self) -> &[f64] {
        &self.b
    }

    pub fn upper_triangle(&self) -> Vec<f64> {
        let k = self.k();
        (0..k)
            .flat_map(|i| (i..k).map(move |j| (i, j)))
            .map(|(i, j)| self.b(i, j))
            .collect()
    }

    pub fn min_mass(&self) -> f64 {
        self.p.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.b.iter().copied().fold(0.0, f64::max)
    }

    /// Interval endpoints 0 = t_0 < ... < t_k = 1 of the [0,1] embedding
    /// (zero-mass blocks give repeated points).
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.k() + 1);
        let mut acc = 0.0;
        out.push(0.0);
        for (i, &pi) in self.p.iter().enumerate() {
            acc += pi;
            out.push(if i + 1 == self.k() { 1.0 } else { acc });
        }
        out
    }

    /// Block containing `x ∈ [0,1]` under the interval embedding.
    pub fn block_of(&self, x: f64) -> usize {
        let bps = self.breakpoints();
        let k = self.k();
        // first block whose right end exceeds x; x = 1 belongs to the last block
        (0..k).find(|&i| x < bps[i + 1] && self.p[i] > 0.0).unwrap_or_else(|| {
            (0..k).rev().find(|&i| self.p[i] > 0.0).unwrap_or(k - 1)
        })
    }

    pub fn scaled(&self, c: f64) -> Result<BlockModel> {
        Self::from_flat(self.p.clone(), self.b.iter().map(|v| v * c).collect())
    }

    /// Relabel blocks: new block `i` is old block `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<BlockModel> {
        let k = self.k();
        let p = perm.iter().map(|&i| self.p[i]).collect();
        let mut b = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                b[i * k + j] = self.b(perm[i], perm[j]);
            }
        }
        Self::from_flat(p, b)
    }

    /// Drop blocks of zero mass.
    pub fn without_empty_blocks(&self) -> BlockModel {
        let keep: Vec<usize> = (0..self.k()).filter(|&i| self.p[i] > 0.0).collect();
        let k = keep.len();
        let mut b = vec![0.0; k * k];
        for (a, &i) in keep.iter().enumerate() {
            for (c, &j) in keep.iter().enumerate() {
                b[a * k + c] = self.b(i, j);
            }
        }
        BlockModel {
            p: keep.iter().map(|&i| self.p[i]).collect(),
            b,
        }
    }

    /// Exact ‖W‖_p = (Σ p_i p_j B_ij^p)^{1/p}.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let k = self.k();
        let mut s = 0.0;
        for i in 0..k {
            for j in 0..k {
                s += self.p[i] * self.p[j] * self.b(i, j).powf(p);
            }
        }
        s.powf(1.0 / p)
    }

    /// Block degrees Σ_j p_j B_ij.
    pub fn block_degrees(&self) -> Vec<f64> {
        let k = self.k();
        (0..k)
            .map(|i| (0..k).map(|j| self.p[j] * self.b(i, j)).sum())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(BlockModel::new(vec![0.5, 0.4], &[vec![0.0, 1.0], vec![1.0, 0.0]]).is_err());
        assert!(BlockModel::new(vec![0.5, 0.5], &[vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        assert!(BlockModel::new(vec![0.5, 0.5], &[vec![0.0, -1.0], vec![-1.0, 0.0]]).is_err());
        assert!(BlockModel::new(vec![0.5, 0.5], &[vec![0.0, 7.0], vec![7.0, 0.0]]).is_ok());
    }

    #[test]
    fn upper_round_trip() {
        let m = BlockModel::from_upper(vec![0.2, 0.3, 0.5], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(m.b(2, 1), 5.0);
        assert_eq!(m.upper_triangle(), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let json = serde_json::to_string(&m).unwrap();
        let back: BlockModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn block_lookup() {
        let m = BlockModel::from_upper(vec![0.25, 0.75], &[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(m.block_of(0.0), 0);
        assert_eq!(m.block_of(0.2499), 0);
        assert_eq!(m.block_of(0.25), 1);
        assert_eq!(m.block_of(1.0), 1);
    }

    #[test]
    fn norms() {
        let m = BlockModel::uniform(&[vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap();
        assert_eq!(m.lp_norm(1.0), 1.0);
        assert_eq!(m.block_degrees(), vec![1.0, 1.0]);
    }
}
