//! Graphons and the analytic quantities defined on them.
//!
//! Step graphons are handled in closed form throughout. Analytic kernels over
//! [0,1] go through adaptive quadrature; the power-law families are singular
//! along `x = 1` and `y = 1`, so they are integrated in the reflected
//! coordinates `s = 1 - x`, `t = 1 - y` where the singularity sits at 0 and
//! can be resolved without cancellation. Mixed-membership graphons live on a
//! simplex and are integrated by seeded Monte Carlo.

mod block_model;
mod named;
mod oracle;
mod rates;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

pub use block_model::{BlockModel, BlockModelRepr};
pub use named::{named_kernel, NamedKernel, NAMED_KERNELS};
pub use oracle::{oracle_error_step, round_to_grid, OracleBound};
pub use rates::{holder_rates, power_law_rates, PowerLawVariant, Rates};

use crate::error::{Error, Result};
use crate::metrics::levy::{AnalyticCdf, Cdf, Provenance, StepCdf};
use crate::quadrature::{self, Estimate, QuadratureSpec};
use crate::rng::{stream_rng, Stream};

/// Samples used by Monte Carlo integrals when the caller gives no budget.
pub const DEFAULT_MC_SAMPLES: usize = 100_000;
/// Seed used by Monte Carlo integrals when the caller gives none.
pub const DEFAULT_MC_SEED: u64 = 0x6772_6170_686f_6e;
/// Tolerance on ‖W‖₁ = 1 for operations that require a normalized graphon.
pub const NORMALIZATION_TOL: f64 = 1e-6;

/// Grading levels toward a singular edge.
const SINGULAR_GRADING: u32 = 12;

/// A point of a graphon's latent space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Point<'a> {
    Unit(f64),
    Simplex(&'a [f64]),
}

/// Latent positions of a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Latent {
    Unit(Vec<f64>),
    Simplex(Vec<Vec<f64>>),
}

impl Latent {
    pub fn len(&self) -> usize {
        match self {
            Latent::Unit(v) => v.len(),
            Latent::Simplex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, i: usize) -> Point<'_> {
        match self {
            Latent::Unit(v) => Point::Unit(v[i]),
            Latent::Simplex(v) => Point::Simplex(&v[i]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Graphon {
    Step(BlockModel),
    /// A code-registered kernel on [0,1]², multiplied by `scale`.
    Analytic {
        kernel: &'static NamedKernel,
        scale: f64,
    },
    /// W(x,y) = (g(x) + g(y)) / 2 with g(x) = (1-α)(1-x)^{-α}.
    PowerLawSum { alpha: f64 },
    /// W(x,y) = g(x) g(y).
    PowerLawProduct { alpha: f64 },
    /// W(p, p') = Σ_ij B_ij p_i p'_j on the simplex with a Dirichlet(α) law.
    MixedMembership { alpha: Vec<f64>, b: Vec<f64> },
}

/// JSON form of a graphon definition.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphonSpec {
    Step {
        p: Vec<f64>,
        b_upper: Vec<f64>,
    },
    PowerLawSum {
        alpha: f64,
    },
    PowerLawProduct {
        alpha: f64,
    },
    MixedMembership {
        alpha: Vec<f64>,
        b_upper: Vec<f64>,
    },
    Named {
        name: String,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        scale: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn is_one(x: &f64) -> bool {
    *x == 1.0
}

impl TryFrom<GraphonSpec> for Graphon {
    type Error = Error;
    fn try_from(spec: GraphonSpec) -> Result<Self> {
        match spec {
            GraphonSpec::Step { p, b_upper } => Ok(Graphon::Step(BlockModel::from_upper(p, &b_upper)?)),
            GraphonSpec::PowerLawSum { alpha } => Graphon::power_law_sum(alpha),
            GraphonSpec::PowerLawProduct { alpha } => Graphon::power_law_product(alpha),
            GraphonSpec::MixedMembership { alpha, b_upper } => {
                let k = alpha.len();
                // reuse the block-model validation for symmetry and signs
                let bm = BlockModel::from_upper(vec![1.0 / k as f64; k], &b_upper)?;
                Graphon::mixed_membership(alpha, bm.b_flat().to_vec())
            }
            GraphonSpec::Named { name, scale } => {
                let kernel = named_kernel(&name)
                    .ok_or_else(|| Error::Parameter(format!("no registered kernel named {name:?}")))?;
                if !(scale > 0.0) || !scale.is_finite() {
                    return Err(Error::Parameter(format!("scale must be positive, got {scale}")));
                }
                Ok(Graphon::Analytic { kernel, scale })
            }
        }
    }
}

impl From<&Graphon> for GraphonSpec {
    fn from(g: &Graphon) -> Self {
        match g {
            Graphon::Step(m) => GraphonSpec::Step {
                p: m.p().to_vec(),
                b_upper: m.upper_triangle(),
            },
            Graphon::PowerLawSum { alpha } => GraphonSpec::PowerLawSum { alpha: *alpha },
            Graphon::PowerLawProduct { alpha } => GraphonSpec::PowerLawProduct { alpha: *alpha },
            Graphon::MixedMembership { alpha, b } => {
                let k = alpha.len();
                GraphonSpec::MixedMembership {
                    alpha: alpha.clone(),
                    b_upper: (0..k)
                        .flat_map(|i| (i..k).map(move |j| (i, j)))
                        .map(|(i, j)| b[i * k + j])
                        .collect(),
                }
            }
            Graphon::Analytic { kernel, scale } => GraphonSpec::Named {
                name: kernel.name.to_string(),
                scale: *scale,
            },
        }
    }
}

impl Serialize for Graphon {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GraphonSpec::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Graphon {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let spec = GraphonSpec::deserialize(d)?;
        Graphon::try_from(spec).map_err(serde::de::Error::custom)
    }
}

/// Consecutive intervals `[t_{i-1}, t_i)` covering [0,1].
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalPartition {
    breaks: Vec<f64>,
}

impl IntervalPartition {
    pub fn new(breaks: Vec<f64>) -> Result<Self> {
        if breaks.len() < 2 || breaks[0] != 0.0 || *breaks.last().unwrap() != 1.0 {
            return Err(Error::Parameter("breakpoints must run from 0 to 1".into()));
        }
        if breaks.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Parameter("breakpoints must be strictly increasing".into()));
        }
        Ok(IntervalPartition { breaks })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Parameter("need at least one interval".into()));
        }
        let mut b: Vec<f64> = (0..=k).map(|i| i as f64 / k as f64).collect();
        b[k] = 1.0;
        Self::new(b)
    }

    pub fn k(&self) -> usize {
        self.breaks.len() - 1
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn interval(&self, i: usize) -> (f64, f64) {
        (self.breaks[i], self.breaks[i + 1])
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.breaks.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Value of a degree CDF at a point, with a standard error when it came
/// from Monte Carlo.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfValue {
    pub value: f64,
    pub std_error: Option<f64>,
}

#[inline]
fn g_complement(alpha: f64, s: f64) -> f64 {
    (1.0 - alpha) * s.powf(-alpha)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Parameter(format!("power-law exponent must lie in (0,1), got {alpha}")));
    }
    Ok(())
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Parameter(format!("norm exponent must be a finite p >= 1, got {p}")));
    }
    Ok(())
}

impl Graphon {
    pub fn step(m: BlockModel) -> Self {
        Graphon::Step(m)
    }

    pub fn constant(c: f64) -> Result<Self> {
        Ok(Graphon::Step(BlockModel::constant(c)?))
    }

    pub fn power_law_sum(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Graphon::PowerLawSum { alpha })
    }

    pub fn power_law_product(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Graphon::PowerLawProduct { alpha })
    }

    pub fn named(name: &str) -> Result<Self> {
        Graphon::try_from(GraphonSpec::Named {
            name: name.to_string(),
            scale: 1.0,
        })
    }

    pub fn mixed_membership(alpha: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let k = alpha.len();
        if k < 2 {
            return Err(Error::Parameter("mixed membership needs at least two communities".into()));
        }
        if alpha.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
            return Err(Error::Parameter("Dirichlet parameters must be positive".into()));
        }
        BlockModel::from_flat(vec![1.0 / k as f64; k], b.clone())?;
        Ok(Graphon::MixedMembership { alpha, b })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graphon specs always serialize")
    }

    /// True for graphons over the unit interval.
    pub fn is_unit_interval(&self) -> bool {
        !matches!(self, Graphon::MixedMembership { .. })
    }

    /// Smallest upper bound on W that is known in closed form (`∞` for the
    /// unbounded families).
    pub fn sup(&self) -> f64 {
        match self {
            Graphon::Step(m) => m.max_value(),
            Graphon::Analytic { kernel, scale } => kernel.sup * scale,
            Graphon::PowerLawSum { .. } | Graphon::PowerLawProduct { .. } => f64::INFINITY,
            Graphon::MixedMembership { b, .. } => b.iter().copied().fold(0.0, f64::max),
        }
    }

    fn unit(&self, x: Point<'_>) -> Result<f64> {
        match x {
            Point::Unit(v) if (0.0..=1.0).contains(&v) => match self {
                Graphon::PowerLawSum { .. } | Graphon::PowerLawProduct { .. } if v >= 1.0 => Err(
                    Error::Domain("power-law graphons are singular at x = 1".into()),
                ),
                _ => Ok(v),
            },
            Point::Unit(v) => Err(Error::Domain(format!("latent coordinate {v} outside [0,1]"))),
            Point::Simplex(_) => Err(Error::Domain(
                "simplex point given to a graphon over [0,1]".into(),
            )),
        }
    }

    fn simplex<'a>(&self, x: Point<'a>, k: usize) -> Result<&'a [f64]> {
        match x {
            Point::Simplex(v) if v.len() == k => {
                let s: f64 = v.iter().sum();
                if v.iter().any(|&c| c < 0.0) || (s - 1.0).abs() > 1e-9 {
                    Err(Error::Domain("point is not in the probability simplex".into()))
                } else {
                    Ok(v)
                }
            }
            Point::Simplex(v) => Err(Error::Domain(format!(
                "simplex point has {} coordinates, expected {k}",
                v.len()
            ))),
            Point::Unit(_) => Err(Error::Domain(
                "unit-interval point given to a mixed-membership graphon".into(),
            )),
        }
    }

    /// W(x, y).
    pub fn eval(&self, x: Point<'_>, y: Point<'_>) -> Result<f64> {
        match self {
            Graphon::Step(m) => {
                let (x, y) = (self.unit(x)?, self.unit(y)?);
                Ok(m.b(m.block_of(x), m.block_of(y)))
            }
            Graphon::Analytic { kernel, scale } => {
                let (x, y) = (self.unit(x)?, self.unit(y)?);
                Ok(scale * (kernel.eval)(x, y))
            }
            Graphon::PowerLawSum { alpha } => {
                let (x, y) = (self.unit(x)?, self.unit(y)?);
                Ok(0.5 * (g_complement(*alpha, 1.0 - x) + g_complement(*alpha, 1.0 - y)))
            }
            Graphon::PowerLawProduct { alpha } => {
                let (x, y) = (self.unit(x)?, self.unit(y)?);
                Ok(g_complement(*alpha, 1.0 - x) * g_complement(*alpha, 1.0 - y))
            }
            Graphon::MixedMembership { alpha, b } => {
                let k = alpha.len();
                let (x, y) = (self.simplex(x, k)?, self.simplex(y, k)?);
                Ok(bilinear(b, x, y))
            }
        }
    }

    /// ∫ h(W(x,y)) over `[x0,x1]×[y0,y1]` for graphons over [0,1].
    /// `levels` are values of W at which `h` has a kink.
    pub(crate) fn integrate_unit(
        &self,
        h: &dyn Fn(f64) -> f64,
        levels: &[f64],
        xr: (f64, f64),
        yr: (f64, f64),
        spec: &QuadratureSpec,
    ) -> Result<Estimate> {
        match self {
            Graphon::Step(m) => {
                let bps = m.breakpoints();
                // slivers from rounding in the cumulative breakpoints count as empty
                let overlap = |r: (f64, f64), i: usize| {
                    let o = r.1.min(bps[i + 1]) - r.0.max(bps[i]);
                    if o > 1e-12 * (r.1 - r.0) {
                        o
                    } else {
                        0.0
                    }
                };
                let mut total = 0.0;
                for i in 0..m.k() {
                    let ox = overlap(xr, i);
                    if ox == 0.0 {
                        continue;
                    }
                    for j in 0..m.k() {
                        let oy = overlap(yr, j);
                        if oy > 0.0 {
                            total += ox * oy * h(m.b(i, j));
                        }
                    }
                }
                Ok(Estimate::exact(total))
            }
            Graphon::Analytic { kernel, scale } => {
                let scaled: Vec<f64> = levels.iter().map(|l| l / scale).collect();
                let outer = (kernel.outer_breaks)(&scaled);
                Ok(quadrature::integrate_2d(
                    |x, y| h(scale * (kernel.eval)(x, y)),
                    xr,
                    yr,
                    &outer,
                    |x| (kernel.inner_breaks)(x, &scaled),
                    spec,
                ))
            }
            Graphon::PowerLawSum { alpha } | Graphon::PowerLawProduct { alpha } => {
                let a = *alpha;
                let sum = matches!(self, Graphon::PowerLawSum { .. });
                let kernel = move |s: f64, t: f64| {
                    if sum {
                        0.5 * (g_complement(a, s) + g_complement(a, t))
                    } else {
                        g_complement(a, s) * g_complement(a, t)
                    }
                };
                let grading = quadrature::graded_toward_zero(SINGULAR_GRADING);
                let gmin = 1.0 - a;
                // reflected ranges
                let sr = (1.0 - xr.1, 1.0 - xr.0);
                let tr = (1.0 - yr.1, 1.0 - yr.0);
                let mut outer = grading.clone();
                for &l in levels {
                    // s at which the level set {t : W(s,t) = l} enters or leaves (0,1]
                    let gs = if sum { 2.0 * l - gmin } else { l / gmin };
                    if gs >= gmin {
                        outer.push((gmin / gs).powf(1.0 / a));
                    }
                }
                let inner = |s: f64| {
                    let mut br = grading.clone();
                    let gs = g_complement(a, s);
                    for &l in levels {
                        let target = if sum { 2.0 * l - gs } else { l / gs };
                        if target >= gmin {
                            br.push((gmin / target).powf(1.0 / a));
                        }
                    }
                    br
                };
                Ok(quadrature::integrate_2d(
                    |s, t| h(kernel(s, t)),
                    sr,
                    tr,
                    &outer,
                    inner,
                    spec,
                ))
            }
            Graphon::MixedMembership { .. } => Err(Error::Domain(
                "mixed-membership graphons are not defined over [0,1]".into(),
            )),
        }
    }

    /// Monte Carlo estimate of E[h(W(x,y))] for independent latent draws.
    fn monte_carlo(&self, h: &dyn Fn(f64) -> f64, samples: usize, seed: u64) -> Result<Estimate> {
        let mut rng = stream_rng(seed, Stream::MonteCarlo);
        let (mut sum, mut sumsq) = (0.0, 0.0);
        for _ in 0..samples {
            let v = match self {
                Graphon::MixedMembership { alpha, b } => {
                    let x = sample_dirichlet(alpha, &mut rng)?;
                    let y = sample_dirichlet(alpha, &mut rng)?;
                    h(bilinear(b, &x, &y))
                }
                _ => {
                    let x: f64 = rng.random();
                    let y: f64 = rng.random();
                    h(self.eval(Point::Unit(x), Point::Unit(y))?)
                }
            };
            sum += v;
            sumsq += v * v;
        }
        let m = samples as f64;
        let mean = sum / m;
        let var = (sumsq / m - mean * mean).max(0.0);
        Ok(Estimate {
            value: mean,
            error: (var / m).sqrt(),
        })
    }

    pub(crate) fn check_integrable(&self, p: f64) -> Result<()> {
        match self {
            Graphon::PowerLawSum { alpha } | Graphon::PowerLawProduct { alpha } => {
                if p * alpha >= 1.0 {
                    return Err(Error::Integrability(format!(
                        "power-law graphon with α = {alpha} is in L^p only for p < {}",
                        1.0 / alpha
                    )));
                }
            }
            Graphon::Analytic { kernel, .. } => {
                if p >= kernel.max_p {
                    return Err(Error::Integrability(format!(
                        "kernel {:?} is declared integrable only for p < {}",
                        kernel.name, kernel.max_p
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// ‖W‖_p. Exact for step graphons; otherwise an estimate with its error.
    pub fn lp_norm(&self, p: f64, spec: &QuadratureSpec) -> Result<Estimate> {
        check_p(p)?;
        self.check_integrable(p)?;
        match self {
            Graphon::Step(m) => Ok(Estimate::exact(m.lp_norm(p))),
            Graphon::Analytic { kernel, scale } if p == 1.0 => Ok(Estimate::exact(scale * kernel.mass)),
            Graphon::PowerLawSum { .. } | Graphon::PowerLawProduct { .. } if p == 1.0 => Ok(Estimate::exact(1.0)),
            Graphon::MixedMembership { alpha, b } if p == 1.0 => {
                let mean = dirichlet_mean(alpha);
                Ok(Estimate::exact(bilinear(b, &mean, &mean)))
            }
            Graphon::MixedMembership { .. } => {
                let e = self.monte_carlo(&|w| w.powf(p), DEFAULT_MC_SAMPLES, DEFAULT_MC_SEED)?;
                Ok(root_estimate(e, p))
            }
            _ => {
                let e = self.integrate_unit(&|w| w.abs().powf(p), &[], (0.0, 1.0), (0.0, 1.0), spec)?;
                Ok(root_estimate(e, p))
            }
        }
    }

    /// W / ‖W‖₁.
    pub fn normalize(&self, spec: &QuadratureSpec) -> Result<Graphon> {
        let norm = self.lp_norm(1.0, spec)?.value;
        if !(norm > 0.0) {
            return Err(Error::Degenerate("cannot normalize the zero graphon".into()));
        }
        Ok(match self {
            Graphon::Step(m) => Graphon::Step(m.scaled(1.0 / norm)?),
            Graphon::Analytic { kernel, scale } => Graphon::Analytic {
                kernel,
                scale: scale / norm,
            },
            // ∫g = 1, so both power-law families already have unit mass
            Graphon::PowerLawSum { .. } | Graphon::PowerLawProduct { .. } => self.clone(),
            Graphon::MixedMembership { alpha, b } => Graphon::MixedMembership {
                alpha: alpha.clone(),
                b: b.iter().map(|v| v / norm).collect(),
            },
        })
    }

    pub fn is_normalized(&self, spec: &QuadratureSpec) -> Result<bool> {
        Ok((self.lp_norm(1.0, spec)?.value - 1.0).abs() <= NORMALIZATION_TOL)
    }

    fn require_normalized(&self) -> Result<()> {
        if !self.is_normalized(&QuadratureSpec::default())? {
            return Err(Error::Parameter(
                "degrees are defined for normalized graphons (‖W‖₁ = 1); call normalize first".into(),
            ));
        }
        Ok(())
    }

    /// Degree W_x = ∫ W(x,y) dπ(y) of a normalized graphon.
    pub fn degree(&self, x: Point<'_>) -> Result<f64> {
        self.require_normalized()?;
        self.degree_unchecked(x)
    }

    pub(crate) fn degree_unchecked(&self, x: Point<'_>) -> Result<f64> {
        match self {
            Graphon::Step(m) => {
                let i = m.block_of(self.unit(x)?);
                Ok((0..m.k()).map(|j| m.p()[j] * m.b(i, j)).sum())
            }
            Graphon::PowerLawSum { alpha } => {
                let x = self.unit(x)?;
                Ok(0.5 + 0.5 * g_complement(*alpha, 1.0 - x))
            }
            Graphon::PowerLawProduct { alpha } => Ok(g_complement(*alpha, 1.0 - self.unit(x)?)),
            Graphon::Analytic { kernel, scale } => {
                let x = self.unit(x)?;
                match kernel.degree {
                    Some(d) => Ok(scale * d(x)),
                    None => {
                        let br = (kernel.inner_breaks)(x, &[]);
                        let e = quadrature::integrate(
                            |y| (kernel.eval)(x, y),
                            0.0,
                            1.0,
                            &br,
                            &QuadratureSpec::default(),
                        );
                        Ok(scale * e.value)
                    }
                }
            }
            Graphon::MixedMembership { alpha, b } => {
                let x = self.simplex(x, alpha.len())?;
                Ok(bilinear(b, x, &dirichlet_mean(alpha)))
            }
        }
    }

    /// The degree distribution D_W of a normalized graphon: closed form where
    /// available, otherwise the empirical law of `samples` Monte Carlo degrees.
    pub fn degree_distribution(&self, samples: usize, seed: u64) -> Result<Cdf> {
        self.require_normalized()?;
        match self {
            Graphon::Step(m) => Ok(Cdf::Step {
                cdf: StepCdf::from_atoms(&m.block_degrees(), m.p())?,
                provenance: Provenance::AnalyticFromGraphon,
            }),
            Graphon::PowerLawSum { alpha } => Ok(Cdf::Continuous {
                cdf: AnalyticCdf::PowerLaw {
                    offset: 0.5,
                    scale: 0.5,
                    alpha: *alpha,
                },
            }),
            Graphon::PowerLawProduct { alpha } => Ok(Cdf::Continuous {
                cdf: AnalyticCdf::PowerLaw {
                    offset: 0.0,
                    scale: 1.0,
                    alpha: *alpha,
                },
            }),
            Graphon::Analytic { kernel, scale } if kernel.degree_cdf.is_some() => Ok(Cdf::Continuous {
                cdf: scale_cdf(kernel.degree_cdf.unwrap(), *scale),
            }),
            _ => {
                let degrees = self.monte_carlo_degrees(samples, seed)?;
                Ok(Cdf::Step {
                    cdf: StepCdf::from_samples(&degrees)?,
                    provenance: Provenance::MonteCarlo,
                })
            }
        }
    }

    /// Degrees at `samples` independent latent draws.
    pub fn monte_carlo_degrees(&self, samples: usize, seed: u64) -> Result<Vec<f64>> {
        let mut rng = stream_rng(seed, Stream::MonteCarlo);
        (0..samples)
            .map(|_| match self {
                Graphon::MixedMembership { alpha, .. } => {
                    let x = sample_dirichlet(alpha, &mut rng)?;
                    self.degree_unchecked(Point::Simplex(&x))
                }
                _ => {
                    let x: f64 = rng.random();
                    self.degree_unchecked(Point::Unit(x))
                }
            })
            .collect()
    }

    /// D_W(λ) = π({x : W_x ≤ λ}).
    pub fn degree_cdf(&self, lambda: f64) -> Result<CdfValue> {
        let cdf = self.degree_distribution(DEFAULT_MC_SAMPLES, DEFAULT_MC_SEED)?;
        let value = cdf.eval(lambda);
        let std_error = (cdf.provenance() == Provenance::MonteCarlo)
            .then(|| (value * (1.0 - value) / DEFAULT_MC_SAMPLES as f64).sqrt());
        Ok(CdfValue { value, std_error })
    }

    /// tail_ρ^{(p)}(W) = ‖W − min{W, 1/ρ}‖_p.
    pub fn tail_rho(&self, rho: f64, p: f64, spec: &QuadratureSpec) -> Result<Estimate> {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::Parameter(format!("ρ must lie in (0,1], got {rho}")));
        }
        check_p(p)?;
        self.check_integrable(p)?;
        let level = 1.0 / rho;
        if self.sup() <= level {
            return Ok(Estimate::exact(0.0));
        }
        let h = move |w: f64| (w - level).max(0.0).powf(p);
        let e = match self {
            Graphon::MixedMembership { .. } => self.monte_carlo(&h, DEFAULT_MC_SAMPLES, DEFAULT_MC_SEED)?,
            _ => self.integrate_unit(&h, &[level], (0.0, 1.0), (0.0, 1.0), spec)?,
        };
        Ok(root_estimate(e, p))
    }

    /// W_P: the block model of cell averages of W over `partition`.
    pub fn step_average(&self, partition: &IntervalPartition, spec: &QuadratureSpec) -> Result<BlockModel> {
        if !self.is_unit_interval() {
            return Err(Error::Domain("step averaging needs a graphon over [0,1]".into()));
        }
        let k = partition.k();
        let lengths = partition.lengths();
        let mut b = vec![0.0; k * k];
        for i in 0..k {
            for j in i..k {
                let e = self.integrate_unit(&|w| w, &[], partition.interval(i), partition.interval(j), spec)?;
                let v = e.value / (lengths[i] * lengths[j]);
                b[i * k + j] = v;
                b[j * k + i] = v;
            }
        }
        // absorb rounding in the telescoped lengths
        let total: f64 = lengths.iter().sum();
        let p = lengths.iter().map(|l| l / total).collect();
        BlockModel::from_flat(p, b)
    }
}

fn scale_cdf(c: AnalyticCdf, s: f64) -> AnalyticCdf {
    match c {
        AnalyticCdf::PowerLaw { offset, scale, alpha } => AnalyticCdf::PowerLaw {
            offset: offset * s,
            scale: scale * s,
            alpha,
        },
        AnalyticCdf::Uniform { lo, hi } => AnalyticCdf::Uniform { lo: lo * s, hi: hi * s },
    }
}

fn root_estimate(e: Estimate, p: f64) -> Estimate {
    let v = e.value.max(0.0);
    let value = v.powf(1.0 / p);
    let error = if v > 0.0 {
        e.error * value / (p * v)
    } else {
        e.error.powf(1.0 / p)
    };
    Estimate { value, error }
}

pub(crate) fn bilinear(b: &[f64], x: &[f64], y: &[f64]) -> f64 {
    let k = x.len();
    let mut s = 0.0;
    for i in 0..k {
        if x[i] == 0.0 {
            continue;
        }
        let row = &b[i * k..(i + 1) * k];
        s += x[i] * row.iter().zip(y).map(|(bij, yj)| bij * yj).sum::<f64>();
    }
    s
}

pub(crate) fn dirichlet_mean(alpha: &[f64]) -> Vec<f64> {
    let total: f64 = alpha.iter().sum();
    alpha.iter().map(|a| a / total).collect()
}

/// Dirichlet draw by normalizing independent Gamma(α_i, 1) variates. The
/// last coordinate is set to `1 - Σ others` so the point lies in the simplex.
pub(crate) fn sample_dirichlet<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    let mut g: Vec<f64> = alpha
        .iter()
        .map(|&a| {
            Gamma::new(a, 1.0)
                .map(|d| d.sample(rng))
                .map_err(|e| Error::Parameter(format!("bad Dirichlet parameter {a}: {e}")))
        })
        .collect::<Result<_>>()?;
    let total: f64 = g.iter().sum();
    let k = g.len();
    let mut acc = 0.0;
    for v in g.iter_mut().take(k - 1) {
        *v /= total;
        acc += *v;
    }
    g[k - 1] = (1.0 - acc).max(0.0);
    Ok(g)
}

/// Per-sample evaluator for W(x_i, x_j) with per-vertex quantities cached.
pub(crate) enum PairKernel<'a> {
    Step { block: Vec<usize>, m: &'a BlockModel },
    Sum { g: Vec<f64> },
    Product { g: Vec<f64> },
    Analytic { f: fn(f64, f64) -> f64, scale: f64, x: &'a [f64] },
    Mixed { proj: Vec<Vec<f64>>, pts: &'a [Vec<f64>] },
}

impl<'a> PairKernel<'a> {
    pub(crate) fn new(w: &'a Graphon, latent: &'a Latent) -> Result<Self> {
        match (w, latent) {
            (Graphon::Step(m), Latent::Unit(x)) => Ok(PairKernel::Step {
                block: x.iter().map(|&v| m.block_of(v)).collect(),
                m,
            }),
            (Graphon::PowerLawSum { alpha }, Latent::Unit(x)) => Ok(PairKernel::Sum {
                g: x.iter().map(|&v| g_complement(*alpha, 1.0 - v)).collect(),
            }),
            (Graphon::PowerLawProduct { alpha }, Latent::Unit(x)) => Ok(PairKernel::Product {
                g: x.iter().map(|&v| g_complement(*alpha, 1.0 - v)).collect(),
            }),
            (Graphon::Analytic { kernel, scale }, Latent::Unit(x)) => Ok(PairKernel::Analytic {
                f: kernel.eval,
                scale: *scale,
                x,
            }),
            (Graphon::MixedMembership { alpha, b }, Latent::Simplex(pts)) => {
                let k = alpha.len();
                // proj_j = B p_j so that W(p_i, p_j) = <p_i, B p_j>
                let proj = pts
                    .iter()
                    .map(|p| (0..k).map(|i| (0..k).map(|j| b[i * k + j] * p[j]).sum()).collect())
                    .collect();
                Ok(PairKernel::Mixed { proj, pts })
            }
            _ => Err(Error::Domain("latent positions do not match the graphon's space".into())),
        }
    }

    #[inline]
    pub(crate) fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            PairKernel::Step { block, m } => m.b(block[i], block[j]),
            PairKernel::Sum { g } => 0.5 * (g[i] + g[j]),
            PairKernel::Product { g } => g[i] * g[j],
            PairKernel::Analytic { f, scale, x } => scale * f(x[i], x[j]),
            PairKernel::Mixed { proj, pts } => pts[i].iter().zip(&proj[j]).map(|(a, b)| a * b).sum(),
        }
    }
}

#[cfg(test)]
mod tests;
