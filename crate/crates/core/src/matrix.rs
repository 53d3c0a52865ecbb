//! Dense square matrices and the `.ssm` text format.
//!
//! `.ssm` (sparse symmetric matrix): first line `n <int>`, then one line
//! `<i> <j> <value>` per nonzero upper-triangle entry (`i < j`, 1-based).
//! Adjacency files omit the value. The dense variant is `n` lines of `n`
//! whitespace-separated values and is recognized by the missing `n` header.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major dense n×n matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Matrix { n, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Mismatch("rows of a square matrix must all have length n".into()));
        }
        Ok(Matrix {
            n,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.check_same(other)?;
        Ok(Matrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix {
            n: self.n,
            data: self.data.iter().map(|a| a * c).collect(),
        }
    }

    pub fn check_same(&self, other: &Matrix) -> Result<()> {
        if self.n != other.n {
            return Err(Error::Mismatch(format!(
                "matrix sizes differ: {} vs {}",
                self.n, other.n
            )));
        }
        Ok(())
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (i + 1..self.n).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// `A^σ` with `(A^σ)_{ij} = A_{σ(i) σ(j)}`.
    pub fn permuted(&self, sigma: &[usize]) -> Matrix {
        Matrix::from_fn(self.n, |i, j| self.get(sigma[i], sigma[j]))
    }

    /// Row sums.
    pub fn degrees(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn total(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// What a symmetric matrix represents; determines the admissible entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// A(G): entries in {0, 1}.
    Adjacency,
    /// Q_n: entries in [0, 1].
    Probability,
    /// H_n(W): raw kernel values.
    Kernel,
}

/// Symmetric matrix with empty diagonal, tagged with its role.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    role: Role,
    m: Matrix,
}

impl SymMatrix {
    pub fn new(role: Role, m: Matrix) -> Result<Self> {
        let n = m.n();
        if n < 2 {
            return Err(Error::Parameter(format!("symmetric matrix needs n >= 2, got {n}")));
        }
        for i in 0..n {
            if m.get(i, i) != 0.0 {
                return Err(Error::Domain(format!("diagonal entry ({i},{i}) is nonzero")));
            }
            for j in i + 1..n {
                let v = m.get(i, j);
                if v != m.get(j, i) {
                    return Err(Error::Domain(format!("entries ({i},{j}) and ({j},{i}) differ")));
                }
                let ok = match role {
                    Role::Adjacency => v == 0.0 || v == 1.0,
                    Role::Probability => (0.0..=1.0).contains(&v),
                    Role::Kernel => v.is_finite(),
                };
                if !ok {
                    return Err(Error::Domain(format!(
                        "entry ({i},{j}) = {v} not admissible for {role:?}"
                    )));
                }
            }
        }
        Ok(SymMatrix { role, m })
    }

    /// Build from an upper-triangle filler; the lower triangle is mirrored.
    #[cfg(test)]
    pub(crate) fn from_upper(role: Role, n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                let v = f(i, j);
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        SymMatrix { role, m }
    }

    pub(crate) fn from_parts_unchecked(role: Role, m: Matrix) -> Self {
        SymMatrix { role, m }
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn n(&self) -> usize {
        self.m.n()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.m
    }

    pub fn into_matrix(self) -> Matrix {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m.get(i, j)
    }

    pub fn edge_count(&self) -> usize {
        let n = self.n();
        (0..n)
            .map(|i| (i + 1..n).filter(|&j| self.m.get(i, j) != 0.0).count())
            .sum()
    }
}

/// ρ(M) = n⁻² Σ_{ij} M_ij.
pub fn density(m: &Matrix) -> f64 {
    let n = m.n() as f64;
    m.total() / (n * n)
}

/// Serialize a symmetric matrix in `.ssm` form.
pub fn to_ssm(m: &SymMatrix) -> String {
    let n = m.n();
    let mut out = format!("n {n}\n");
    for i in 0..n {
        for j in i + 1..n {
            let v = m.get(i, j);
            if v != 0.0 {
                if m.role() == Role::Adjacency {
                    let _ = writeln!(out, "{} {}", i + 1, j + 1);
                } else {
                    let _ = writeln!(out, "{} {} {}", i + 1, j + 1, v);
                }
            }
        }
    }
    out
}

/// Dense text variant: n lines of n values.
pub fn to_dense_text(m: &Matrix) -> String {
    let mut out = String::new();
    for i in 0..m.n() {
        let row: Vec<String> = m.row(i).iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Parse either text format into a general matrix. `.ssm` input is mirrored
/// into a symmetric matrix; the dense variant is taken as is.
pub fn parse_matrix(text: &str, origin: &str) -> Result<Matrix> {
    let perr = |msg: String| Error::Parse {
        path: origin.to_string(),
        msg,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let Some((_, first)) = lines.next() else {
        return Err(perr("empty input".into()));
    };
    if let Some(rest) = first.strip_prefix("n ") {
        let n: usize = rest
            .trim()
            .parse()
            .map_err(|_| perr(format!("bad header {first:?}")))?;
        let mut m = Matrix::zeros(n);
        for (lineno, line) in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 2 && toks.len() != 3 {
                return Err(perr(format!("line {lineno}: expected `i j [value]`")));
            }
            let idx = |t: &str| -> Result<usize> {
                t.parse::<usize>()
                    .map_err(|_| perr(format!("line {lineno}: bad index {t:?}")))
            };
            let (i, j) = (idx(toks[0])?, idx(toks[1])?);
            if i == 0 || j == 0 || i > n || j > n || i >= j {
                return Err(perr(format!("line {lineno}: need 1 <= i < j <= {n}")));
            }
            let v = if toks.len() == 3 {
                toks[2]
                    .parse::<f64>()
                    .map_err(|_| perr(format!("line {lineno}: bad value {:?}", toks[2])))?
            } else {
                1.0
            };
            m.set(i - 1, j - 1, v);
            m.set(j - 1, i - 1, v);
        }
        Ok(m)
    } else {
        let mut rows = Vec::new();
        for (lineno, line) in std::iter::once((1, first)).chain(lines) {
            let row = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| perr(format!("line {lineno}: bad number")))?;
            rows.push(row);
        }
        Matrix::from_rows(&rows).map_err(|e| perr(e.to_string()))
    }
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix(&text, &path.display().to_string())
}

pub fn write_ssm(path: &Path, m: &SymMatrix) -> Result<()> {
    fs::write(path, to_ssm(m)).map_err(|e| Error::io(path, e))
}

/// Read an `.ssm`/dense file and infer its role from its entries.
pub fn read_sym_matrix(path: &Path) -> Result<SymMatrix> {
    let m = read_matrix(path)?;
    let role = if m.data().iter().all(|&v| v == 0.0 || v == 1.0) {
        Role::Adjacency
    } else if m.data().iter().all(|&v| (0.0..=1.0).contains(&v)) {
        Role::Probability
    } else {
        Role::Kernel
    };
    SymMatrix::new(role, m)
}
