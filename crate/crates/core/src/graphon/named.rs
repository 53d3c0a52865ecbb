use std::fmt;

use crate::metrics::levy::AnalyticCdf;

/// A kernel on [0,1]² registered in code and referenced by name from JSON.
///
/// `inner_breaks(x, levels)` lists the y-values where `y ↦ W(x,y)` has a kink
/// or crosses one of `levels`; `outer_breaks(levels)` lists the x-values where
/// that set of crossings changes. Both feed the quadrature's initial
/// subdivision.
pub struct NamedKernel {
    pub name: &'static str,
    pub eval: fn(f64, f64) -> f64,
    pub sup: f64,
    /// ∫∫ W, used for ‖W‖₁ and the normalization check.
    pub mass: f64,
    /// The kernel is in L^p for every p below this bound.
    pub max_p: f64,
    pub degree: Option<fn(f64) -> f64>,
    pub degree_cdf: Option<AnalyticCdf>,
    pub inner_breaks: fn(f64, &[f64]) -> Vec<f64>,
    pub outer_breaks: fn(&[f64]) -> Vec<f64>,
}

impl fmt::Debug for NamedKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NamedKernel").field("name", &self.name).finish()
    }
}

impl PartialEq for NamedKernel {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
    }
}

fn four_xy(x: f64, y: f64) -> f64 {
    4.0 * x * y
}

fn four_xy_inner(x: f64, levels: &[f64]) -> Vec<f64> {
    if x <= 0.0 {
        return Vec::new();
    }
    levels.iter().map(|l| l / (4.0 * x)).collect()
}

fn four_xy_outer(levels: &[f64]) -> Vec<f64> {
    levels.iter().map(|l| l / 4.0).collect()
}

fn three_min(x: f64, y: f64) -> f64 {
    3.0 * x.min(y)
}

fn three_min_inner(x: f64, levels: &[f64]) -> Vec<f64> {
    let mut out = vec![x];
    out.extend(levels.iter().map(|l| l / 3.0).filter(|&y| y < x));
    out
}

fn three_min_outer(levels: &[f64]) -> Vec<f64> {
    levels.iter().map(|l| l / 3.0).collect()
}

pub static NAMED_KERNELS: &[NamedKernel] = &[
    NamedKernel {
        name: "four_xy",
        eval: four_xy,
        sup: 4.0,
        mass: 1.0,
        max_p: f64::INFINITY,
        degree: Some(|x| 2.0 * x),
        degree_cdf: Some(AnalyticCdf::Uniform { lo: 0.0, hi: 2.0 }),
        inner_breaks: four_xy_inner,
        outer_breaks: four_xy_outer,
    },
    NamedKernel {
        name: "three_min",
        eval: three_min,
        sup: 3.0,
        mass: 1.0,
        max_p: f64::INFINITY,
        degree: Some(|x| 3.0 * (x - 0.5 * x * x)),
        degree_cdf: None,
        inner_breaks: three_min_inner,
        outer_breaks: three_min_outer,
    },
];

pub fn named_kernel(name: &str) -> Option<&'static NamedKernel> {
    NAMED_KERNELS.iter().find(|k| k.name == name)
}
