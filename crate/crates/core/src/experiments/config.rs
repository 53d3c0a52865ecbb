use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::EstimatorMode;
use crate::graphon::Graphon;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Consistency,
    Concentration,
    DegreeDistribution,
    NormConvergence,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExperimentKind::Consistency => "consistency",
            ExperimentKind::Concentration => "concentration",
            ExperimentKind::DegreeDistribution => "degree_distribution",
            ExperimentKind::NormConvergence => "norm_convergence",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Ls,
    Cut,
    Degsort,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Ls => "ls",
            Algorithm::Cut => "cut",
            Algorithm::Degsort => "degsort",
        })
    }
}

/// Target density as a function of n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum DensityRule {
    Constant { rho: f64 },
    /// ρ = c·n^{−γ}
    Power { c: f64, gamma: f64 },
    /// ρ = c·log(n)/n
    LogOverN { c: f64 },
}

impl Default for DensityRule {
    /// ρ = 1/√n.
    fn default() -> Self {
        DensityRule::Power { c: 1.0, gamma: 0.5 }
    }
}

impl DensityRule {
    pub fn rho(&self, n: usize) -> f64 {
        let nf = n as f64;
        match *self {
            DensityRule::Constant { rho } => rho,
            DensityRule::Power { c, gamma } => c * nf.powf(-gamma),
            DensityRule::LogOverN { c } => c * nf.ln() / nf,
        }
    }
}

/// Class-count rule for the estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ClassRule {
    Kappa { kappa: f64 },
    K { k: usize },
    /// k = ⌈c·n^e⌉
    KPower { c: f64, exponent: f64 },
}

fn ceil_snapped(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() <= 1e-9 {
        r as usize
    } else {
        x.ceil() as usize
    }
}

impl ClassRule {
    /// Number of classes at size n.
    pub fn k(&self, n: usize) -> usize {
        match *self {
            ClassRule::K { k } => k,
            ClassRule::KPower { c, exponent } => ceil_snapped(c * (n as f64).powf(exponent)).max(1),
            ClassRule::Kappa { kappa } => {
                let m = ((kappa * n as f64) + 1e-9).floor().max(1.0) as usize;
                n.div_ceil(m)
            }
        }
    }

    /// κ at size n; for k-based rules κ = 1/k.
    pub fn kappa(&self, n: usize) -> f64 {
        match *self {
            ClassRule::Kappa { kappa } => kappa,
            _ => 1.0 / self.k(n) as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// δ̂₂(A_π, Q)/ρ
    Delta2Q,
    /// ‖ρ(G)⁻¹ (G)_π − W‖₁ with vertices placed in latent order
    TruthL1,
    /// d_LP between the normalized degree CDFs of G and of W
    Dlp,
    Objective,
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::Delta2Q => "delta2_q",
            Metric::TruthL1 => "truth_l1",
            Metric::Dlp => "dlp",
            Metric::Objective => "objective",
        }
    }
}

fn default_mode() -> EstimatorMode {
    EstimatorMode::Search
}
fn default_restarts() -> usize {
    8
}
fn default_max_iters() -> usize {
    100_000
}
fn default_p() -> f64 {
    1.0
}
fn default_candidates() -> usize {
    1000
}
fn default_mc_samples() -> usize {
    100_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub graphon: Graphon,
    pub n: Vec<usize>,
    #[serde(default)]
    pub density: DensityRule,
    #[serde(default)]
    pub classes: Option<ClassRule>,
    #[serde(default)]
    pub algorithm: Option<Algorithm>,
    #[serde(default = "default_mode")]
    pub mode: EstimatorMode,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    pub seeds: Vec<u64>,
    /// Consistency metrics to record; empty picks a default for the algorithm.
    #[serde(default)]
    pub metrics: Vec<Metric>,
    /// Exponent for the norm convergence experiment.
    #[serde(default = "default_p")]
    pub p: f64,
    /// Random candidate partitions in the concentration experiment.
    #[serde(default = "default_candidates")]
    pub candidates: usize,
    /// Monte Carlo sample size where a quantity has no closed form.
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n.is_empty() || self.n.iter().any(|&n| n < 2) {
            return Err(Error::Parameter("n grid must be non-empty with every n >= 2".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Parameter("seed list must be non-empty".into()));
        }
        for &n in &self.n {
            let rho = self.density.rho(n);
            if !(rho > 0.0 && rho <= 1.0) {
                return Err(Error::Parameter(format!("density rule gives ρ = {rho} at n = {n}; need ρ in (0,1]")));
            }
        }
        match self.experiment {
            ExperimentKind::Consistency => {
                if self.algorithm.is_none() {
                    return Err(Error::Parameter("consistency experiments need an algorithm".into()));
                }
                if self.classes.is_none() {
                    return Err(Error::Parameter("consistency experiments need a class rule".into()));
                }
            }
            ExperimentKind::Concentration => {
                if self.classes.is_none() {
                    return Err(Error::Parameter("concentration experiments need a class rule".into()));
                }
            }
            ExperimentKind::DegreeDistribution => {}
            ExperimentKind::NormConvergence => {
                if !(self.p >= 1.0) || !self.p.is_finite() {
                    return Err(Error::Parameter(format!("p must be a finite value >= 1, got {}", self.p)));
                }
            }
        }
        if let Some(ClassRule::Kappa { kappa }) = self.classes {
            if !(kappa > 0.0 && kappa <= 1.0) {
                return Err(Error::Parameter(format!("kappa must lie in (0, 1], got {kappa}")));
            }
        }
        if let Some(ClassRule::K { k: 0 }) = self.classes {
            return Err(Error::Parameter("k must be >= 1".into()));
        }
        Ok(())
    }

    /// Metrics recorded by a consistency run.
    pub fn consistency_metrics(&self) -> Vec<Metric> {
        if !self.metrics.is_empty() {
            let mut m = self.metrics.clone();
            m.sort();
            m.dedup();
            return m;
        }
        match self.algorithm {
            Some(Algorithm::Degsort) => vec![Metric::TruthL1, Metric::Objective],
            _ => vec![Metric::Delta2Q, Metric::TruthL1, Metric::Objective],
        }
    }
}
