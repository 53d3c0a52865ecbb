use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Algorithm, ExperimentConfig, ExperimentKind, Metric};
use crate::error::{Error, Result};
use crate::estimators::{
    degree_sorting, least_cut_exact, least_cut_search, least_squares_exact, least_squares_search,
    EstimationResult, EstimatorMode, Partition,
};
use crate::graphon::{Graphon, Latent, Point};
use crate::matrix::{density, Matrix};
use crate::metrics::norms::EXACT_CUT_MAX_N;
use crate::metrics::{cut_norm_exact, cut_norm_lower, hat_delta_p, lp_distance, matrix_lp, Mode};
use crate::metrics::levy::{levy_prokhorov, normalized_degree_cdf};
use crate::quadrature::QuadratureSpec;
use crate::rng::{child_seed, stream_rng, Stream};
use crate::sampling::{bernoulli_graph, build_h, build_q, sample, sample_degrees, sample_latent};
use crate::SearchBudget;

/// Up to this n, δ̂₂ is computed by exhaustive relabeling.
const DELTA_EXACT_MAX_N: usize = 9;
/// Up to this n, δ̂₂ uses swap search; above it the identity alignment.
const DELTA_SEARCH_MAX_N: usize = 256;
/// Allowed distance between the fitted tail slope and −1/α.
pub const TAIL_SLOPE_TOL: f64 = 0.3;
/// Allowed gap between ‖H_n‖_p and ‖W‖_p in the norm check.
pub const NORM_TOL: f64 = 0.05;
/// Points on the log-log grid of the tail fit.
const TAIL_GRID: usize = 20;
/// The top of the fitted range leaves this many vertices above it.
const TAIL_TOP_COUNT: usize = 10;

/// One recorded quantity of a trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub metric: String,
    pub value: f64,
    /// Reference value: the bound of a concentration check, the predicted
    /// tail slope, or the graphon-side norm.
    pub bound: Option<f64>,
    pub holds: Option<bool>,
    /// How the value was obtained (exact, lower bound, heuristic, ...).
    pub method: String,
}

impl MetricValue {
    fn plain(metric: &str, value: f64, method: &str) -> Self {
        MetricValue {
            metric: metric.into(),
            value,
            bound: None,
            holds: None,
            method: method.into(),
        }
    }

    fn check(metric: &str, value: f64, bound: f64, holds: bool, method: &str) -> Self {
        MetricValue {
            metric: metric.into(),
            value,
            bound: Some(bound),
            holds: Some(holds),
            method: method.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub experiment: ExperimentKind,
    pub n: usize,
    pub seed: u64,
    pub rho_target: f64,
    pub rho_observed: Option<f64>,
    /// κ for least squares / least cut, k for degree sorting and concentration.
    pub class_param: Option<f64>,
    pub algorithm: Option<Algorithm>,
    pub values: Vec<MetricValue>,
    /// "ok", or the reason the trial (or part of it) was skipped.
    pub status: String,
    pub wall_time_s: f64,
}

impl TrialRecord {
    fn new(cfg: &ExperimentConfig, n: usize, seed: u64) -> Self {
        TrialRecord {
            experiment: cfg.experiment,
            n,
            seed,
            rho_target: cfg.density.rho(n),
            rho_observed: None,
            class_param: None,
            algorithm: None,
            values: Vec::new(),
            status: "ok".into(),
            wall_time_s: 0.0,
        }
    }

    pub fn value(&self, metric: &str) -> Option<&MetricValue> {
        self.values.iter().find(|v| v.metric == metric)
    }

    fn note(&mut self, msg: String) {
        if self.status == "ok" {
            self.status = msg;
        } else {
            self.status = format!("{}; {msg}", self.status);
        }
    }
}

/// Seed for everything random in trial (n, seed).
pub fn trial_seed(seed: u64, n: usize) -> u64 {
    child_seed(seed, n as u64)
}

/// Run every (n, seed) trial of the configured experiment. Trials run in
/// parallel; the returned table is ordered by (n, seed) and does not depend
/// on the number of threads. Per-trial failures are recorded in `status`.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let mut tasks: Vec<(usize, u64)> = cfg.n.iter().flat_map(|&n| cfg.seeds.iter().map(move |&s| (n, s))).collect();
    tasks.sort();
    tasks.dedup();
    Ok(tasks
        .into_par_iter()
        .map(|(n, seed)| {
            let start = Instant::now();
            let mut rec = TrialRecord::new(cfg, n, seed);
            let outcome = match cfg.experiment {
                ExperimentKind::Consistency => consistency_trial(cfg, &mut rec),
                ExperimentKind::Concentration => concentration_trial(cfg, &mut rec),
                ExperimentKind::DegreeDistribution => degree_trial(cfg, &mut rec),
                ExperimentKind::NormConvergence => norm_trial(cfg, &mut rec),
            };
            if let Err(e) = outcome {
                rec.note(format!("error: {e}"));
            }
            rec.wall_time_s = start.elapsed().as_secs_f64();
            rec
        })
        .collect())
}

pub fn run_consistency(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    expect_kind(cfg, ExperimentKind::Consistency)?;
    run(cfg)
}

pub fn run_concentration(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    expect_kind(cfg, ExperimentKind::Concentration)?;
    run(cfg)
}

pub fn run_degree_distribution(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    expect_kind(cfg, ExperimentKind::DegreeDistribution)?;
    run(cfg)
}

pub fn run_norm_convergence(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    expect_kind(cfg, ExperimentKind::NormConvergence)?;
    run(cfg)
}

fn expect_kind(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<()> {
    if cfg.experiment != kind {
        return Err(Error::Parameter(format!("config is a {} experiment, not {kind}", cfg.experiment)));
    }
    Ok(())
}

fn budget(cfg: &ExperimentConfig, seed: u64) -> SearchBudget {
    SearchBudget {
        restarts: cfg.restarts,
        max_iters: cfg.max_iters,
        seed,
    }
}

fn estimate(cfg: &ExperimentConfig, a: &Matrix, n: usize, seed: u64) -> Result<(EstimationResult, f64)> {
    let rule = cfg.classes.expect("validated");
    let b = budget(cfg, child_seed(seed, 1));
    match cfg.algorithm.expect("validated") {
        Algorithm::Degsort => {
            let k = rule.k(n);
            Ok((degree_sorting(a, k)?, k as f64))
        }
        Algorithm::Ls => {
            let kappa = rule.kappa(n);
            let r = match cfg.mode {
                EstimatorMode::Exact => least_squares_exact(a, kappa)?,
                EstimatorMode::Search => least_squares_search(a, kappa, &b)?,
            };
            Ok((r, kappa))
        }
        Algorithm::Cut => {
            let kappa = rule.kappa(n);
            let r = match cfg.mode {
                EstimatorMode::Exact => least_cut_exact(a, kappa)?,
                EstimatorMode::Search => least_cut_search(a, kappa, &b)?,
            };
            Ok((r, kappa))
        }
    }
}

const GAUSS2: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];

/// ‖ρ(G)⁻¹ A_π − W‖₁ where vertex i (in latent order) occupies
/// [i/n, (i+1)/n). Each cell is integrated with the 2×2 Gauss rule.
pub fn truth_l1(w: &Graphon, est: &EstimationResult, latent: &Latent) -> Result<f64> {
    let Latent::Unit(x) = latent else {
        return Err(Error::Parameter("truth error needs latent positions in [0,1]".into()));
    };
    if x.windows(2).any(|p| p[0] > p[1]) {
        return Err(Error::Parameter("latent positions must be sorted".into()));
    }
    let n = est.partition.n();
    let nf = n as f64;
    let assign = est.partition.assign();
    let rows: Vec<Result<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut s = 0.0;
            for j in i..n {
                let c = est.normalized.b(assign[i], assign[j]);
                let mut cell = 0.0;
                for gx in GAUSS2 {
                    for gy in GAUSS2 {
                        let v = w.eval(Point::Unit((i as f64 + gx) / nf), Point::Unit((j as f64 + gy) / nf))?;
                        cell += (c - v).abs();
                    }
                }
                s += if i == j { cell } else { 2.0 * cell };
            }
            Ok(s)
        })
        .collect();
    let mut total = 0.0;
    for r in rows {
        total += r?;
    }
    Ok(total / (4.0 * nf * nf))
}

fn consistency_trial(cfg: &ExperimentConfig, rec: &mut TrialRecord) -> Result<()> {
    let (n, seed) = (rec.n, trial_seed(rec.seed, rec.n));
    rec.algorithm = cfg.algorithm;
    let s = sample(&cfg.graphon, n, rec.rho_target, seed)?;
    let a = s.g.matrix();
    rec.rho_observed = Some(density(a));
    let (est, param) = estimate(cfg, a, n, seed)?;
    rec.class_param = Some(param);
    for metric in cfg.consistency_metrics() {
        let v = match metric {
            Metric::Objective => Ok(MetricValue::plain("objective", est.objective, mode_name(est.mode))),
            Metric::TruthL1 => truth_l1(&cfg.graphon, &est, &s.latent)
                .map(|v| MetricValue::plain("truth_l1", v, "cellwise 2x2 Gauss in latent order")),
            Metric::Delta2Q => delta2_q(&est, s.q.matrix(), rec.rho_target, seed),
            Metric::Dlp => normalized_degree_cdf(&a.degrees()).and_then(|dg| {
                let dw = cfg.graphon.degree_distribution(cfg.mc_samples, seed)?;
                Ok(MetricValue::plain("dlp", levy_prokhorov(&dg, &dw)?, "bisection"))
            }),
        };
        match v {
            Ok(v) => rec.values.push(v),
            Err(e) => rec.note(format!("{} skipped: {e}", metric.name())),
        }
    }
    Ok(())
}

fn mode_name(m: EstimatorMode) -> &'static str {
    match m {
        EstimatorMode::Exact => "exact",
        EstimatorMode::Search => "search upper bound",
    }
}

fn delta2_q(est: &EstimationResult, q: &Matrix, rho: f64, seed: u64) -> Result<MetricValue> {
    let a = q.n();
    let (_, lift) = block_average_model(est);
    let (value, method) = if a <= DELTA_EXACT_MAX_N {
        (hat_delta_p(&lift, q, 2.0, Mode::Exact, &SearchBudget::default())?.value, "exact relabeling")
    } else if a <= DELTA_SEARCH_MAX_N {
        let b = SearchBudget {
            restarts: 0,
            max_iters: 100_000,
            seed,
        };
        (hat_delta_p(&lift, q, 2.0, Mode::Heuristic, &b)?.value, "swap search upper bound")
    } else {
        (lp_distance(&lift, q, 2.0)?, "identity alignment upper bound")
    };
    Ok(MetricValue::plain("delta2_q", value / rho, method))
}

/// The n×n matrix of the fitted block model in vertex labels.
fn block_average_model(est: &EstimationResult) -> (Matrix, Matrix) {
    let k = est.model.k();
    let b = Matrix::from_fn(k, |x, y| est.model.b(x, y));
    let lift = crate::estimators::lifted(&b, &est.partition);
    (b, lift)
}

/// 8·√(ρ(Q)·((1 + log k)/n + k²/n²))
pub fn partition_bound(rho_q: f64, k: usize, n: usize) -> f64 {
    let (kf, nf) = (k as f64, n as f64);
    8.0 * (rho_q * ((1.0 + kf.ln()) / nf + kf * kf / (nf * nf))).sqrt()
}

/// 15·√(ρ(Q)/n)
pub fn cut_bound(rho_q: f64, n: usize) -> f64 {
    15.0 * (rho_q / n as f64).sqrt()
}

/// ‖D_π‖₁ = n⁻² Σ_ab |Σ_{V_a×V_b} D_ij| for D = A − Q.
fn averaged_l1(d: &Matrix, pi: &Partition) -> f64 {
    let k = pi.k();
    let assign = pi.assign();
    let mut s = vec![0.0; k * k];
    for i in 0..d.n() {
        let row = d.row(i);
        let base = assign[i] * k;
        for (j, &v) in row.iter().enumerate() {
            s[base + assign[j]] += v;
        }
    }
    let nf = d.n() as f64;
    s.iter().map(|v| v.abs()).sum::<f64>() / (nf * nf)
}

fn concentration_trial(cfg: &ExperimentConfig, rec: &mut TrialRecord) -> Result<()> {
    let (n, seed) = (rec.n, trial_seed(rec.seed, rec.n));
    let k = cfg.classes.expect("validated").k(n);
    rec.class_param = Some(k as f64);
    let latent = sample_latent(&cfg.graphon, n, seed)?;
    let q = build_q(&cfg.graphon, &latent, rec.rho_target)?;
    let a = bernoulli_graph(&q, seed)?;
    let (q, a) = (q.matrix(), a.matrix());
    rec.rho_observed = Some(density(a));
    let rho_q = density(q);
    let d = a.sub(q)?;

    let mut candidates = Vec::with_capacity(cfg.candidates + 2);
    let mut rng = stream_rng(seed, Stream::Partitions);
    for _ in 0..cfg.candidates {
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        candidates.push(Partition::new(labels, k)?);
    }
    if a.total() > 0.0 {
        candidates.push(degree_sorting(a, k)?.partition);
    }
    let b = SearchBudget {
        restarts: 2,
        max_iters: cfg.max_iters,
        seed: child_seed(seed, 1),
    };
    if let Ok(r) = least_squares_search(a, 1.0 / k as f64, &b) {
        candidates.push(r.partition);
    }
    let kmax = candidates.iter().map(|p| p.k()).max().unwrap_or(k).max(k);
    let eps = candidates.par_iter().map(|p| averaged_l1(&d, p)).reduce(|| 0.0, f64::max);
    let bound = partition_bound(rho_q, kmax, n);
    rec.values.push(MetricValue::check(
        "partition_l1",
        eps,
        bound,
        eps <= bound,
        &format!(
            "necessary-condition test: max over {} candidate partitions ({} random + estimator outputs), not all partitions",
            candidates.len(),
            cfg.candidates
        ),
    ));

    let (cut, method) = if n <= EXACT_CUT_MAX_N {
        (cut_norm_exact(&d)?.value, "exact")
    } else {
        (cut_norm_lower(&d, 8, seed).value, "heuristic lower bound")
    };
    let cb = cut_bound(rho_q, n);
    rec.values.push(MetricValue::check("cut_a_minus_q", cut, cb, cut <= cb, method));
    Ok(())
}

/// Least squares slope of log(1 − D(λ)) against log λ over
/// [λ_hi/10, λ_hi], where λ_hi leaves `TAIL_TOP_COUNT` normalized degrees
/// above it.
pub fn tail_slope(normalized: &[f64]) -> Option<f64> {
    let n = normalized.len();
    if n <= TAIL_TOP_COUNT {
        return None;
    }
    let mut sorted = normalized.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let hi = sorted[TAIL_TOP_COUNT];
    if !(hi > 0.0) {
        return None;
    }
    let lo = hi / 10.0;
    let survival = |lam: f64| sorted.partition_point(|&d| d > lam) as f64 / n as f64;
    let pts: Vec<(f64, f64)> = (0..TAIL_GRID)
        .map(|i| {
            let lam = (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (TAIL_GRID - 1) as f64).exp();
            (lam, survival(lam))
        })
        .filter(|&(_, s)| s > 0.0)
        .map(|(l, s)| (l.ln(), s.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn degree_trial(cfg: &ExperimentConfig, rec: &mut TrialRecord) -> Result<()> {
    let (n, seed) = (rec.n, trial_seed(rec.seed, rec.n));
    let deg = sample_degrees(&cfg.graphon, n, rec.rho_target, seed)?;
    let total: f64 = deg.iter().sum();
    rec.rho_observed = Some(total / (n as f64 * n as f64));
    if total == 0.0 {
        rec.note("skipped: empty graph".into());
        return Ok(());
    }
    let dg = normalized_degree_cdf(&deg)?;
    let dw = cfg.graphon.degree_distribution(cfg.mc_samples, seed)?;
    let method = match dw.provenance() {
        crate::metrics::levy::Provenance::MonteCarlo => "bisection vs Monte Carlo D_W",
        _ => "bisection vs analytic D_W",
    };
    rec.values.push(MetricValue::plain("dlp", levy_prokhorov(&dg, &dw)?, method));
    let alpha = match cfg.graphon {
        Graphon::PowerLawSum { alpha } | Graphon::PowerLawProduct { alpha } => Some(alpha),
        _ => None,
    };
    if let Some(alpha) = alpha {
        let mean = total / n as f64;
        let normalized: Vec<f64> = deg.iter().map(|d| d / mean).collect();
        match tail_slope(&normalized) {
            Some(s) => {
                let target = -1.0 / alpha;
                rec.values.push(MetricValue::check(
                    "tail_slope",
                    s,
                    target,
                    (s - target).abs() <= TAIL_SLOPE_TOL,
                    "log-log fit over the top decade; bound = -1/alpha, holds = within 0.3",
                ));
            }
            None => rec.note("tail slope skipped: too few tail points".into()),
        }
    }
    Ok(())
}

/// Monte Carlo estimate of ‖ρ⁻¹ W[Q] − W‖_p, with vertex i of Q occupying
/// [i/n, (i+1)/n).
fn q_gap(w: &Graphon, q: &Matrix, rho: f64, p: f64, samples: usize, seed: u64) -> Result<f64> {
    let n = q.n();
    let mut rng = stream_rng(seed, Stream::MonteCarlo);
    let mut s = 0.0;
    for _ in 0..samples {
        let (x, y): (f64, f64) = (rng.random(), rng.random());
        let i = ((x * n as f64) as usize).min(n - 1);
        let j = ((y * n as f64) as usize).min(n - 1);
        let v = w.eval(Point::Unit(x), Point::Unit(y))?;
        s += (q.get(i, j) / rho - v).abs().powf(p);
    }
    Ok((s / samples as f64).powf(1.0 / p))
}

fn norm_trial(cfg: &ExperimentConfig, rec: &mut TrialRecord) -> Result<()> {
    let (n, seed) = (rec.n, trial_seed(rec.seed, rec.n));
    let latent = sample_latent(&cfg.graphon, n, seed)?;
    let h = build_h(&cfg.graphon, &latent)?;
    let norm_h = matrix_lp(h.matrix(), cfg.p);
    let norm_w = cfg.graphon.lp_norm(cfg.p, &QuadratureSpec::default())?.value;
    rec.values.push(MetricValue::check(
        "norm_h",
        norm_h,
        norm_w,
        (norm_h - norm_w).abs() <= NORM_TOL,
        "bound = graphon norm; holds = within 0.05",
    ));
    rec.values.push(MetricValue::plain("norm_gap", (norm_h - norm_w).abs(), "exact matrix norm vs quadrature"));
    drop(h);
    if matches!(latent, Latent::Unit(_)) {
        let q = build_q(&cfg.graphon, &latent, rec.rho_target)?;
        rec.rho_observed = Some(density(q.matrix()));
        let v = q_gap(&cfg.graphon, q.matrix(), rec.rho_target, cfg.p, cfg.mc_samples, seed)?;
        rec.values.push(MetricValue::plain(
            "q_gap",
            v,
            &format!("Monte Carlo over {} points", cfg.mc_samples),
        ));
    } else {
        rec.note("q_gap skipped: simplex latent space has no interval order".into());
    }
    Ok(())
}
