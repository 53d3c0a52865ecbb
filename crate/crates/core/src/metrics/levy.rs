//! Degree distribution functions and the Lévy–Prokhorov distance between them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    EmpiricalFromGraph,
    AnalyticFromGraphon,
    MonteCarlo,
}

/// Right-continuous step CDF: `D(λ) = values[i]` for `points[i] <= λ < points[i+1]`,
/// zero left of `points[0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCdf {
    points: Vec<f64>,
    values: Vec<f64>,
}

impl StepCdf {
    /// Empirical CDF of a sample. Equal values are merged into one jump.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Degenerate("empirical CDF of an empty sample".into()));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("non-finite sample".into()));
        }
        let mut s = samples.to_vec();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let m = s.len();
        let mut points = Vec::new();
        let mut values = Vec::new();
        for (i, &x) in s.iter().enumerate() {
            if i + 1 < m && s[i + 1] == x {
                continue;
            }
            points.push(x);
            values.push((i + 1) as f64 / m as f64);
        }
        Ok(StepCdf { points, values })
    }

    /// CDF of a discrete law with the given atoms and masses.
    pub fn from_atoms(atoms: &[f64], masses: &[f64]) -> Result<Self> {
        if atoms.len() != masses.len() || atoms.is_empty() {
            return Err(Error::Mismatch("atoms and masses must be non-empty and equally long".into()));
        }
        let mut pairs: Vec<(f64, f64)> = atoms.iter().copied().zip(masses.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let total: f64 = masses.iter().sum();
        let mut points: Vec<f64> = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        let mut acc = 0.0;
        for (x, w) in pairs {
            acc += w;
            if points.last() == Some(&x) {
                *values.last_mut().unwrap() = acc / total;
            } else {
                points.push(x);
                values.push(acc / total);
            }
        }
        *values.last_mut().unwrap() = 1.0;
        Ok(StepCdf { points, values })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        // number of points <= lambda
        let idx = self.points.partition_point(|&p| p <= lambda);
        if idx == 0 {
            0.0
        } else {
            self.values[idx - 1]
        }
    }
}

/// Closed-form continuous CDFs arising as degree laws of analytic graphons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalyticCdf {
    /// Law of `offset + scale·g(x)` for `g(x) = (1-α)(1-x)^{-α}`, `x ~ U[0,1]`.
    PowerLaw { offset: f64, scale: f64, alpha: f64 },
    /// Uniform law on `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
}

impl AnalyticCdf {
    pub fn eval(&self, lambda: f64) -> f64 {
        match *self {
            AnalyticCdf::PowerLaw {
                offset,
                scale,
                alpha,
            } => {
                let u = (lambda - offset) / scale;
                if u < 1.0 - alpha {
                    0.0
                } else {
                    1.0 - ((1.0 - alpha) / u).powf(1.0 / alpha)
                }
            }
            AnalyticCdf::Uniform { lo, hi } => ((lambda - lo) / (hi - lo)).clamp(0.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Cdf {
    Step {
        cdf: StepCdf,
        provenance: Provenance,
    },
    Continuous {
        cdf: AnalyticCdf,
    },
}

impl Cdf {
    pub fn eval(&self, lambda: f64) -> f64 {
        match self {
            Cdf::Step { cdf, .. } => cdf.eval(lambda),
            Cdf::Continuous { cdf } => cdf.eval(lambda),
        }
    }

    pub fn provenance(&self) -> Provenance {
        match self {
            Cdf::Step { provenance, .. } => *provenance,
            Cdf::Continuous { .. } => Provenance::AnalyticFromGraphon,
        }
    }
}

/// Normalized degree distribution `D(λ) = |V|⁻¹ Σ 1{d_x ≤ λ d̄}` of a
/// (weighted) graph given by its adjacency matrix.
pub fn degree_cdf_of_matrix(a: &Matrix) -> Result<Cdf> {
    let degrees = a.degrees();
    normalized_degree_cdf(&degrees)
}

/// Same as [`degree_cdf_of_matrix`] from a precomputed degree sequence.
pub fn normalized_degree_cdf(degrees: &[f64]) -> Result<Cdf> {
    let n = degrees.len() as f64;
    let mean = degrees.iter().sum::<f64>() / n;
    if !(mean > 0.0) {
        return Err(Error::Degenerate(
            "average degree is zero; normalized degrees are undefined".into(),
        ));
    }
    let normalized: Vec<f64> = degrees.iter().map(|d| d / mean).collect();
    Ok(Cdf::Step {
        cdf: StepCdf::from_samples(&normalized)?,
        provenance: Provenance::EmpiricalFromGraph,
    })
}

const BISECTION_DEPTH: usize = 40;

/// Lévy–Prokhorov distance
/// `inf{ε : D'(λ-ε) - ε ≤ D(λ) ≤ D'(λ+ε) + ε  ∀λ}`.
///
/// Exact up to the bisection tolerance (`2^-40`) when at least one side is a
/// step function; two continuous CDFs are not supported.
pub fn levy_prokhorov(d: &Cdf, d2: &Cdf) -> Result<f64> {
    let feasible: Box<dyn Fn(f64) -> bool + '_> = match (d, d2) {
        (Cdf::Step { cdf: a, .. }, Cdf::Step { cdf: b, .. }) => {
            Box::new(move |eps| step_step_feasible(a, b, eps))
        }
        (Cdf::Step { cdf: a, .. }, Cdf::Continuous { cdf: b }) => {
            Box::new(move |eps| step_continuous_feasible(a, b, eps))
        }
        // the defining condition is symmetric in (D, D')
        (Cdf::Continuous { cdf: a }, Cdf::Step { cdf: b, .. }) => {
            Box::new(move |eps| step_continuous_feasible(b, a, eps))
        }
        (Cdf::Continuous { .. }, Cdf::Continuous { .. }) => {
            return Err(Error::Parameter(
                "Lévy–Prokhorov distance between two continuous CDFs is not supported; \
                 discretize one side"
                    .into(),
            ))
        }
    };
    if feasible(0.0) {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..BISECTION_DEPTH {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

fn step_step_feasible(d: &StepCdf, d2: &StepCdf, eps: f64) -> bool {
    // D'(λ-ε) - ε ≤ D(λ): the difference is right-continuous and piecewise
    // constant, so checking all jump locations suffices.
    for &lam in &d.points {
        if d2.eval(lam - eps) - eps > d.eval(lam) {
            return false;
        }
        if d.eval(lam) > d2.eval(lam + eps) + eps {
            return false;
        }
    }
    for (&q, &vq) in d2.points.iter().zip(&d2.values) {
        // λ = q + ε: D'(λ-ε) = D'(q)
        if vq - eps > d.eval(q + eps) {
            return false;
        }
        // λ = q - ε: D'(λ+ε) = D'(q)
        if d.eval(q - eps) > vq + eps {
            return false;
        }
    }
    true
}

fn step_continuous_feasible(d: &StepCdf, c: &AnalyticCdf, eps: f64) -> bool {
    let pts = &d.points;
    let vals = &d.values;
    // on [b_i, b_{i+1}) D = v_i and sup D'(λ-ε) = D'(b_{i+1}-ε)
    for i in 0..pts.len() {
        let below = if i == 0 { 0.0 } else { vals[i - 1] };
        if c.eval(pts[i] - eps) - eps > below {
            return false;
        }
        // inf of D'(λ+ε) over [b_i, ...) is at λ = b_i
        if vals[i] > c.eval(pts[i] + eps) + eps {
            return false;
        }
    }
    true
}
