//! Globally adaptive Gauss–Kronrod (G7/K15) quadrature in one dimension and
//! its iterated extension to rectangles.
//!
//! Unbounded but integrable kernels are handled by the caller passing
//! breakpoints (geometric grading toward a singular edge, kink locations);
//! the adaptive loop then only has to resolve smooth pieces.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances and work limits for a quadrature call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Maximum number of subintervals per one-dimensional integral.
    pub max_intervals: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rel_tol: 1e-6,
            abs_tol: 1e-13,
            max_intervals: 4000,
        }
    }
}

/// An integral value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, error: 0.0 }
    }
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    aux: f64,
    error: f64,
    splittable: bool,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        // unsplittable pieces sink to the bottom
        (self.splittable, self.error)
            .partial_cmp(&(other.splittable, other.error))
            .unwrap_or(Ordering::Equal)
    }
}

/// One K15 panel. `f` returns (value, aux); aux is integrated with the
/// Kronrod weights but does not drive adaptivity.
fn kronrod<F: FnMut(f64) -> (f64, f64)>(f: &mut F, a: f64, b: f64) -> Piece {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let (fc, ac) = f(center);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    let mut auxk = ac * WGK[7];
    let mut resabs = fc.abs() * WGK[7];
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let (f1, a1) = f(center - dx);
        let (f2, a2) = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        auxk += WGK[j] * (a1 + a2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let reskh = resk * 0.5;
    let mut resasc = WGK[7] * (fc - reskh).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let value = resk * half;
    resasc *= half.abs();
    let mut error = ((resk - resg) * half).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    error = error.max(50.0 * f64::EPSILON * resabs * half.abs());
    let splittable = (b - a) > 1e-15 * a.abs().max(b.abs()).max(1e-300) && center > a && center < b;
    Piece {
        a,
        b,
        value,
        aux: auxk * half,
        error,
        splittable,
    }
}

fn initial_points(a: f64, b: f64, breaks: &[f64]) -> Vec<f64> {
    let mut pts: Vec<f64> = std::iter::once(a)
        .chain(breaks.iter().copied().filter(|&x| x > a && x < b))
        .chain(std::iter::once(b))
        .collect();
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup();
    pts
}

fn adaptive<F: FnMut(f64) -> (f64, f64)>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    spec: &QuadratureSpec,
) -> (Estimate, f64) {
    if b <= a {
        return (Estimate::exact(0.0), 0.0);
    }
    let pts = initial_points(a, b, breaks);
    let mut heap = BinaryHeap::new();
    for w in pts.windows(2) {
        heap.push(kronrod(&mut f, w[0], w[1]));
    }
    let mut count = heap.len();
    let mut total: f64 = heap.iter().map(|p| p.value).sum();
    let mut err: f64 = heap.iter().map(|p| p.error).sum();
    loop {
        let target = spec.abs_tol.max(spec.rel_tol * total.abs());
        if err <= target || count >= spec.max_intervals {
            break;
        }
        let worst = heap.pop().expect("non-empty");
        if !worst.splittable {
            heap.push(worst);
            break;
        }
        let mid = 0.5 * (worst.a + worst.b);
        let left = kronrod(&mut f, worst.a, mid);
        let right = kronrod(&mut f, mid, worst.b);
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        count += 1;
    }
    // sum small pieces first
    let mut pieces = heap.into_vec();
    pieces.sort_by(|x, y| x.value.abs().partial_cmp(&y.value.abs()).unwrap_or(Ordering::Equal));
    let value = pieces.iter().map(|p| p.value).sum();
    let error = pieces.iter().map(|p| p.error).sum();
    let aux = pieces.iter().map(|p| p.aux).sum();
    (Estimate { value, error }, aux)
}

/// ∫_a^b f(x) dx with initial subdivision at `breaks`.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    spec: &QuadratureSpec,
) -> Estimate {
    adaptive(|x| (f(x), 0.0), a, b, breaks, spec).0
}

/// Iterated integral ∫_{s0}^{s1} ∫_{t0}^{t1} f(s,t) dt ds.
///
/// `outer_breaks` subdivide the s-range; `inner_breaks(s)` returns breakpoints
/// for the t-integral at fixed s. The reported error adds the outer estimate
/// to the integrated inner estimates.
pub fn integrate_2d<F, B>(
    f: F,
    s_range: (f64, f64),
    t_range: (f64, f64),
    outer_breaks: &[f64],
    inner_breaks: B,
    spec: &QuadratureSpec,
) -> Estimate
where
    F: Fn(f64, f64) -> f64,
    B: Fn(f64) -> Vec<f64>,
{
    let inner_spec = QuadratureSpec {
        rel_tol: spec.rel_tol * 0.1,
        abs_tol: spec.abs_tol * 0.1,
        ..*spec
    };
    let (est, inner_err) = adaptive(
        |s| {
            let br = inner_breaks(s);
            let e = integrate(|t| f(s, t), t_range.0, t_range.1, &br, &inner_spec);
            (e.value, e.error)
        },
        s_range.0,
        s_range.1,
        outer_breaks,
        spec,
    );
    Estimate {
        value: est.value,
        error: est.error + inner_err.abs(),
    }
}

/// Breakpoints `2^{-1}, 2^{-2}, ..., 2^{-levels}` grading toward 0.
pub fn graded_toward_zero(levels: u32) -> Vec<f64> {
    (1..=levels).map(|j| 0.5f64.powi(j as i32)).collect()
}
