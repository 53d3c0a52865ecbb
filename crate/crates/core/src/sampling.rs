//! W-random graphs: latent positions, the kernel matrix H_n(W), the
//! probability matrix Q_n(ρW) and the Bernoulli graph G_n(ρW).
//!
//! Randomness: latent positions use the `Latent` substream of the master
//! seed and edges the `Edges` substream, with row `i` of the upper triangle
//! on ChaCha stream `i`. Row `i` draws one uniform per `j > i` in order of
//! `j`, so the graph depends only on (Q, seed), never on thread scheduling.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphon::{sample_dirichlet, Graphon, Latent, PairKernel};
use crate::matrix::{Matrix, Role, SymMatrix};
use crate::rng::{row_rng, stream_rng, Stream};

pub use crate::matrix::density;

/// A W-random graph with everything needed to evaluate estimators on it.
/// Estimators only ever see `g`.
#[derive(Debug, Clone)]
pub struct Sample {
    pub latent: Latent,
    pub q: SymMatrix,
    pub g: SymMatrix,
    pub rho_target: f64,
    pub seed: u64,
}

/// Summary of a sample for logging and metadata files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleInfo {
    pub n: usize,
    pub rho_target: f64,
    pub seed: u64,
    pub edges: usize,
    pub density_q: f64,
    pub density_g: f64,
}

impl Sample {
    pub fn n(&self) -> usize {
        self.g.n()
    }

    pub fn info(&self) -> SampleInfo {
        SampleInfo {
            n: self.n(),
            rho_target: self.rho_target,
            seed: self.seed,
            edges: self.g.edge_count(),
            density_q: density(self.q.matrix()),
            density_g: density(self.g.matrix()),
        }
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Parameter(format!("need at least 2 vertices, got {n}")));
    }
    Ok(())
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::Parameter(format!("ρ must lie in (0,1], got {rho}")));
    }
    Ok(())
}

/// n i.i.d. latent positions: uniform on [0,1] (returned sorted) or
/// Dirichlet on the simplex.
pub fn sample_latent(w: &Graphon, n: usize, seed: u64) -> Result<Latent> {
    check_n(n)?;
    let mut rng = stream_rng(seed, Stream::Latent);
    match w {
        Graphon::MixedMembership { alpha, .. } => Ok(Latent::Simplex(
            (0..n).map(|_| sample_dirichlet(alpha, &mut rng)).collect::<Result<_>>()?,
        )),
        _ => {
            let mut x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            x.sort_by(f64::total_cmp);
            Ok(Latent::Unit(x))
        }
    }
}

/// Upper-triangle filler evaluated in parallel by rows, mirrored.
fn fill_symmetric(n: usize, f: impl Fn(usize, usize) -> f64 + Sync) -> Matrix {
    fill_symmetric_rows(n, |i| (i + 1..n).map(|j| f(i, j)).collect())
}

/// H_n(W): W(x_i, x_j) off the diagonal.
pub fn build_h(w: &Graphon, latent: &Latent) -> Result<SymMatrix> {
    check_n(latent.len())?;
    let pk = PairKernel::new(w, latent)?;
    let m = fill_symmetric(latent.len(), |i, j| pk.get(i, j));
    SymMatrix::new(Role::Kernel, m)
}

/// Q_n(ρW): min{1, ρ W(x_i, x_j)} off the diagonal.
pub fn build_q(w: &Graphon, latent: &Latent, rho: f64) -> Result<SymMatrix> {
    check_n(latent.len())?;
    check_rho(rho)?;
    let pk = PairKernel::new(w, latent)?;
    let m = fill_symmetric(latent.len(), |i, j| q_entry(&pk, rho, i, j));
    SymMatrix::new(Role::Probability, m)
}

#[inline]
fn q_entry(pk: &PairKernel<'_>, rho: f64, i: usize, j: usize) -> f64 {
    (rho * pk.get(i, j)).min(1.0)
}

/// Independent Bernoulli(Q_ij) edges for i < j.
pub fn bernoulli_graph(q: &SymMatrix, seed: u64) -> Result<SymMatrix> {
    if q.role() == Role::Kernel && q.matrix().data().iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::Domain("edge probabilities must lie in [0,1]".into()));
    }
    let n = q.n();
    let m = fill_symmetric_rows(n, |i| {
        let mut rng = row_rng(seed, Stream::Edges, i as u64);
        (i + 1..n)
            .map(|j| {
                let u: f64 = rng.random();
                if u < q.get(i, j) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect()
    });
    Ok(SymMatrix::from_parts_unchecked(Role::Adjacency, m))
}

fn fill_symmetric_rows(n: usize, row: impl Fn(usize) -> Vec<f64> + Sync + Send) -> Matrix {
    let rows: Vec<Vec<f64>> = (0..n).into_par_iter().map(row).collect();
    let mut m = Matrix::zeros(n);
    for (i, r) in rows.into_iter().enumerate() {
        for (off, v) in r.into_iter().enumerate() {
            let j = i + 1 + off;
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
    m
}

/// Draw latent positions, Q_n(ρW) and G_n(ρW) from one master seed.
pub fn sample(w: &Graphon, n: usize, rho: f64, seed: u64) -> Result<Sample> {
    let latent = sample_latent(w, n, seed)?;
    let q = build_q(w, &latent, rho)?;
    let g = bernoulli_graph(&q, seed)?;
    Ok(Sample {
        latent,
        q,
        g,
        rho_target: rho,
        seed,
    })
}

/// Degrees of the graph `sample(w, n, rho, seed).g`, computed without
/// storing any n×n matrix. Uses the same latent draws and the same edge
/// coins, so the result equals `g.degrees()` exactly.
pub fn sample_degrees(w: &Graphon, n: usize, rho: f64, seed: u64) -> Result<Vec<f64>> {
    check_rho(rho)?;
    let latent = sample_latent(w, n, seed)?;
    let pk = PairKernel::new(w, &latent)?;
    // edges of row i to j > i, as neighbour lists
    let upper: Vec<Vec<u32>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = row_rng(seed, Stream::Edges, i as u64);
            (i + 1..n)
                .filter(|&j| {
                    let u: f64 = rng.random();
                    u < q_entry(&pk, rho, i, j)
                })
                .map(|j| j as u32)
                .collect()
        })
        .collect();
    let mut deg = vec![0.0; n];
    for (i, nb) in upper.iter().enumerate() {
        deg[i] += nb.len() as f64;
        for &j in nb {
            deg[j as usize] += 1.0;
        }
    }
    Ok(deg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphon::BlockModel;
    use crate::quadrature::QuadratureSpec;
    use approx::assert_relative_eq;

    #[test]
    fn latent_is_deterministic_and_sorted() {
        let w = Graphon::constant(1.0).unwrap();
        let a = sample_latent(&w, 50, 7).unwrap();
        assert_eq!(a, sample_latent(&w, 50, 7).unwrap());
        assert_ne!(a, sample_latent(&w, 50, 8).unwrap());
        let Latent::Unit(x) = a else { panic!() };
        assert!(x.windows(2).all(|p| p[0] <= p[1]));
    }

    #[test]
    fn uniform_mean() {
        let w = Graphon::constant(1.0).unwrap();
        let Latent::Unit(x) = sample_latent(&w, 10_000, 1).unwrap() else { panic!() };
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        assert!((mean - 0.5).abs() < 0.02);
    }

    #[test]
    fn dirichlet_latent_on_simplex() {
        let w = Graphon::mixed_membership(vec![1.0, 1.0], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let Latent::Simplex(x) = sample_latent(&w, 200, 3).unwrap() else { panic!() };
        for p in x {
            assert_eq!(p[0] + p[1], 1.0);
        }
    }

    #[test]
    fn q_examples() {
        let w = Graphon::constant(1.0).unwrap();
        let lat = sample_latent(&w, 5, 0).unwrap();
        let q = build_q(&w, &lat, 1.0).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(q.get(i, j), if i == j { 0.0 } else { 1.0 });
            }
        }
        // inactive truncation: Q = ρH
        let w = Graphon::Step(BlockModel::uniform(&[vec![0.5, 3.0], vec![3.0, 1.0]]).unwrap());
        let lat = sample_latent(&w, 30, 2).unwrap();
        let h = build_h(&w, &lat).unwrap();
        let q = build_q(&w, &lat, 0.3).unwrap();
        for i in 0..30 {
            for j in 0..30 {
                assert_eq!(q.get(i, j), 0.3 * h.get(i, j));
            }
        }
        // g(x) + g(y) > 2 near the singular corner: clipped at 1
        let w = Graphon::power_law_sum(0.5).unwrap();
        let lat = Latent::Unit(vec![0.1, 0.99, 0.999]);
        let q = build_q(&w, &lat, 1.0).unwrap();
        assert_eq!(q.get(1, 2), 1.0);
        assert!(q.get(0, 1) == 1.0 && q.get(0, 2) == 1.0);
        assert!(build_h(&w, &lat).unwrap().get(1, 2) > 2.0);
    }

    #[test]
    fn bernoulli_extremes() {
        let zeros = SymMatrix::new(Role::Probability, Matrix::zeros(6)).unwrap();
        assert_eq!(bernoulli_graph(&zeros, 1).unwrap().edge_count(), 0);
        let ones = SymMatrix::new(Role::Probability, Matrix::from_fn(6, |i, j| if i == j { 0.0 } else { 1.0 })).unwrap();
        assert_eq!(bernoulli_graph(&ones, 1).unwrap().edge_count(), 15);
    }

    #[test]
    fn edge_count_within_four_sigma() {
        let n = 200;
        let q = SymMatrix::new(Role::Probability, Matrix::from_fn(n, |i, j| if i == j { 0.0 } else { 0.3 })).unwrap();
        let g = bernoulli_graph(&q, 11).unwrap();
        let m = (n * (n - 1) / 2) as f64;
        let sigma = (m * 0.3 * 0.7).sqrt();
        assert!((g.edge_count() as f64 - 0.3 * m).abs() <= 4.0 * sigma);
    }

    #[test]
    fn edge_marginals_over_seeds() {
        let n = 6;
        let q = SymMatrix::new(
            Role::Probability,
            Matrix::from_fn(n, |i, j| if i == j { 0.0 } else { ((i + j) % 5) as f64 / 5.0 + 0.05 }),
        )
        .unwrap();
        let trials = 10_000;
        let mut freq = Matrix::zeros(n);
        for s in 0..trials {
            let g = bernoulli_graph(&q, s).unwrap();
            for i in 0..n {
                for j in 0..n {
                    freq.set(i, j, freq.get(i, j) + g.get(i, j));
                }
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                let p = q.get(i, j);
                let sigma = (p * (1.0 - p) / trials as f64).sqrt();
                assert!((freq.get(i, j) / trials as f64 - p).abs() <= 4.0 * sigma);
            }
        }
    }

    #[test]
    fn density_examples() {
        let ones = Matrix::from_fn(5, |i, j| if i == j { 0.0 } else { 1.0 });
        assert_eq!(density(&ones), 20.0 / 25.0);
        assert_eq!(density(&Matrix::zeros(4)), 0.0);
    }

    #[test]
    fn sparse_q_density_tracks_rho() {
        let w = Graphon::constant(1.0).unwrap();
        let s = sample(&w, 4000, 0.01, 5).unwrap();
        assert!((density(s.q.matrix()) / 0.01 - 1.0).abs() <= 0.05);
        // E[ρ(G)] = ρ(n-1)/n
        let n: f64 = 4000.0;
        let m = n * (n - 1.0) / 2.0;
        let sigma = (m * 0.01 * 0.99).sqrt() * 2.0 / (n * n);
        assert!((density(s.g.matrix()) - 0.01 * (n - 1.0) / n).abs() <= 4.0 * sigma);
    }

    #[test]
    fn h_norm_approaches_graphon_norm() {
        let w = Graphon::Step(BlockModel::uniform(&[vec![0.5, 1.5], vec![1.5, 0.5]]).unwrap());
        let s = sample_latent(&w, 2000, 4).unwrap();
        let h = build_h(&w, &s).unwrap();
        let norm = crate::metrics::matrix_lp(h.matrix(), 2.0);
        let exact = w.lp_norm(2.0, &QuadratureSpec::default()).unwrap().value;
        assert_relative_eq!(norm, exact, max_relative = 0.05);
    }

    #[test]
    fn streamed_degrees_match_dense_graph() {
        for w in [Graphon::power_law_product(0.5).unwrap(), Graphon::named("four_xy").unwrap()] {
            let s = sample(&w, 300, 0.05, 21).unwrap();
            assert_eq!(sample_degrees(&w, 300, 0.05, 21).unwrap(), s.g.matrix().degrees());
        }
    }

    #[test]
    fn graph_is_independent_of_thread_count() {
        let w = Graphon::power_law_sum(0.5).unwrap();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| sample(&w, 300, 0.1, 3).unwrap());
        let b = four.install(|| sample(&w, 300, 0.1, 3).unwrap());
        assert_eq!(a.g, b.g);
        assert_eq!(a.q, b.q);
    }
}
