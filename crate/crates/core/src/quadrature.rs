//! Adaptive Gauss-Legendre integration of complex-valued functions.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::C64;

/// Default relative tolerance.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

const MAX_DEPTH: u32 = 24;

/// Nodes and weights of an `n`-point rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "a rule needs at least one node");
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = libm::cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
            let mut deriv = 1.0;
            for _ in 0..100 {
                let (p, dp) = legendre(n, x);
                deriv = dp;
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre(n, x);
            if dp != 0.0 {
                deriv = dp;
            }
            nodes.push(x);
            weights.push(2.0 / ((1.0 - x * x) * deriv * deriv));
        }
        GaussLegendre { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Single application on `[a, b]`.
    pub fn apply<F: FnMut(f64) -> C64>(&self, f: &mut F, a: f64, b: f64) -> C64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut sum = C64::new(0.0, 0.0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            sum += f(mid + half * x) * *w;
        }
        sum * half
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}

/// `∫_a^b f`, bisecting 16-point panels until each panel agrees with its
/// two halves to `tolerance` relative to the coarse estimate. `panels`
/// pre-splits the interval, which helps with sharply peaked integrands.
pub fn integrate<F: FnMut(f64) -> C64>(f: F, a: f64, b: f64, panels: usize, tolerance: f64) -> C64 {
    integrate_with_floor(f, a, b, panels, tolerance, 0.0)
}

/// Like [`integrate`], but also accepts any result within `floor` in
/// absolute terms. Needed when the integrand may cancel to rounding noise.
pub fn integrate_with_floor<F: FnMut(f64) -> C64>(
    mut f: F,
    a: f64,
    b: f64,
    panels: usize,
    tolerance: f64,
    floor: f64,
) -> C64 {
    if a == b {
        return C64::new(0.0, 0.0);
    }
    let rule = GaussLegendre::new(16);
    let panels = panels.max(1);
    let width = (b - a) / panels as f64;
    let bounds: Vec<(f64, f64)> = (0..panels).map(|i| (a + width * i as f64, a + width * (i + 1) as f64)).collect();
    let coarse: Vec<C64> = bounds.iter().map(|&(lo, hi)| rule.apply(&mut f, lo, hi)).collect();
    let scale = coarse.iter().map(|c| c.norm()).sum::<f64>();
    let abs_tol = (tolerance * scale).max(floor).max(f64::MIN_POSITIVE) / panels as f64;
    let mut total = C64::new(0.0, 0.0);
    for (&(lo, hi), &whole) in bounds.iter().zip(&coarse) {
        total += refine(&rule, &mut f, lo, hi, whole, abs_tol, 0);
    }
    total
}

fn refine<F: FnMut(f64) -> C64>(
    rule: &GaussLegendre,
    f: &mut F,
    a: f64,
    b: f64,
    whole: C64,
    abs_tol: f64,
    depth: u32,
) -> C64 {
    let mid = 0.5 * (a + b);
    let left = rule.apply(f, a, mid);
    let right = rule.apply(f, mid, b);
    let halves = left + right;
    if (halves - whole).norm() <= abs_tol || depth >= MAX_DEPTH {
        return halves;
    }
    refine(rule, f, a, mid, left, 0.5 * abs_tol, depth + 1) + refine(rule, f, mid, b, right, 0.5 * abs_tol, depth + 1)
}
