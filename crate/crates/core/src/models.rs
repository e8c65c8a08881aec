//! Builders for the reference systems and their closed-form amplitudes.
//!
//! The analytic functions here are written directly from the known closed
//! forms and share no code with the diagram engine, so they can serve as
//! independent checks of it.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fockspace::{Hop, ModeSpec, Port, PortTerm, SystemSpec};
use crate::spectral::Spectrum;
use crate::C64;

/// Relative distance from the collocated-pair exceptional point below which
/// the system is rejected.
pub const CRITICAL_PROXIMITY: f64 = 1e-6;

/// Single two-level emitter between a left and a right waveguide.
pub fn build_two_level(omega: f64, gamma_left: f64, gamma_right: f64) -> Result<SystemSpec> {
    if !(gamma_left >= 0.0 && gamma_right >= 0.0) {
        return Err(Error::InvalidSpec("decay rates must be nonnegative".into()));
    }
    SystemSpec::new(
        vec![ModeSpec::two_level(omega)],
        vec![],
        vec![
            Port::new("L", vec![PortTerm::from_rate(0, gamma_left)]),
            Port::new("R", vec![PortTerm::from_rate(0, gamma_right)]),
        ],
    )
}

/// Two collocated emitters sharing one waveguide, in mean/half-difference
/// parameters: `ω_{1,2} = ω_c ± ω_d`, `γ_{1,2} = γ_c ± γ_d`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollocatedParams {
    pub omega_c: f64,
    pub omega_d: f64,
    pub gamma_c: f64,
    pub gamma_d: f64,
}

impl CollocatedParams {
    pub fn new(omega_c: f64, omega_d: f64, gamma_c: f64, gamma_d: f64) -> Result<Self> {
        if !(gamma_c >= gamma_d.abs()) {
            return Err(Error::InvalidSpec(format!(
                "collocated pair needs gamma_c >= |gamma_d| (got {gamma_c}, {gamma_d})"
            )));
        }
        Ok(CollocatedParams { omega_c, omega_d, gamma_c, gamma_d })
    }

    pub fn frequencies(&self) -> (f64, f64) {
        (self.omega_c + self.omega_d, self.omega_c - self.omega_d)
    }

    pub fn rates(&self) -> (f64, f64) {
        (self.gamma_c + self.gamma_d, self.gamma_c - self.gamma_d)
    }

    /// Relative distance to the manifold `γ_d = 0, ω_d² = γ_c²/4` where the
    /// single-excitation block is defective.
    pub fn critical_distance(&self) -> f64 {
        let quarter = 0.25 * self.gamma_c * self.gamma_c;
        if quarter == 0.0 {
            return f64::INFINITY;
        }
        let detuning = (self.omega_d * self.omega_d - quarter).abs() / quarter;
        detuning.max(self.gamma_d.abs() / self.gamma_c)
    }

    /// Closed-form spectrum: `(ε⁽¹⁾₋, ε⁽¹⁾₊, ε⁽²⁾)`.
    pub fn spectrum(&self) -> (C64, C64, C64) {
        let (wc, wd, gc, gd) = (self.omega_c, self.omega_d, self.gamma_c, self.gamma_d);
        let center = C64::new(wc, -gc / 2.0);
        let root = C64::new(wd * wd - gc * gc / 4.0, -wd * gd).sqrt();
        (center - root, center + root, C64::new(2.0 * wc, -gc))
    }
}

/// Two collocated two-level emitters on a single port labelled `W`.
pub fn build_collocated(params: &CollocatedParams) -> Result<SystemSpec> {
    let distance = params.critical_distance();
    if distance <= CRITICAL_PROXIMITY {
        return Err(Error::DefectiveHamiltonian {
            n: 1,
            condition: f64::INFINITY,
            detail: format!(
                "parameters lie within relative {distance:.1e} of the exceptional point \
                 gamma_d = 0, omega_d^2 = gamma_c^2/4"
            ),
        });
    }
    let (w1, w2) = params.frequencies();
    let (g1, g2) = params.rates();
    SystemSpec::new(
        vec![ModeSpec::two_level(w1), ModeSpec::two_level(w2)],
        vec![],
        vec![Port::new("W", vec![PortTerm::from_rate(0, g1), PortTerm::from_rate(1, g2)])],
    )
}

/// Bose-Hubbard chain of `sites` identical Kerr resonators with the left
/// port on the first site and the right port on the last. `ring` adds the
/// hop closing the chain (needs at least three sites).
pub fn build_bose_hubbard(
    sites: usize,
    omega0: f64,
    kerr: f64,
    hopping: f64,
    gamma_first: f64,
    gamma_last: f64,
    ring: bool,
) -> Result<SystemSpec> {
    if sites == 0 {
        return Err(Error::InvalidSpec("a chain needs at least one site".into()));
    }
    if ring && sites < 3 {
        return Err(Error::InvalidSpec("a ring needs at least three sites".into()));
    }
    let modes = (0..sites).map(|_| ModeSpec::boson(omega0, kerr)).collect();
    let mut hops: Vec<Hop> = (0..sites - 1).map(|i| Hop { i, j: i + 1, strength: hopping }).collect();
    if ring {
        hops.push(Hop { i: sites - 1, j: 0, strength: hopping });
    }
    SystemSpec::new(
        modes,
        hops,
        vec![
            Port::new("L", vec![PortTerm::from_rate(0, gamma_first)]),
            Port::new("R", vec![PortTerm::from_rate(sites - 1, gamma_last)]),
        ],
    )
}

/// Reflection and transmission of a two-level emitter coupled with `γ` to
/// each side: `t = −iγ/(k − ω + iγ)`, `r = 1 + t`.
pub fn tl_one_photon(omega: f64, gamma: f64, k: f64) -> (C64, C64) {
    let t = C64::new(0.0, -gamma) / C64::new(k - omega, gamma);
    (C64::new(1.0, 0.0) + t, t)
}

/// Connected `2m`-point function of the two-level emitter as an explicit
/// permutation sum of its single loop diagram.
pub fn tl_green_2m(omega: f64, gamma: f64, k: &[f64], p: &[f64]) -> C64 {
    let m = k.len();
    assert_eq!(m, p.len(), "k and p must have equal length");
    let orders = all_orders(m);
    let pole = C64::new(-omega, gamma);
    let mut sum = C64::new(0.0, 0.0);
    for ks in &orders {
        for ps in &orders {
            let mut term = C64::new(1.0, 0.0);
            let mut running = 0.0;
            for j in 0..m {
                running += k[ks[j]];
                term /= pole + running;
                if j + 1 < m {
                    running -= p[ps[j]];
                    term /= running;
                }
            }
            sum += term;
        }
    }
    let gm = libm::pow(gamma, m as f64);
    C64::new(0.0, -gm) / libm::pow(2.0 * PI, m as f64 - 1.0) * sum
}

/// Closed-form two-photon connected amplitude of the two-level emitter.
pub fn tl_green_4(omega: f64, gamma: f64, k: [f64; 2], p: [f64; 2]) -> C64 {
    let f = |x: f64| C64::new(x - omega, gamma);
    let numer = C64::new(0.0, gamma * gamma) * C64::new(k[0] + k[1] - 2.0 * omega, 2.0 * gamma);
    numer / (f(k[0]) * f(k[1]) * f(p[0]) * f(p[1]) * PI)
}

fn all_orders(m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for rest in all_orders(m - 1) {
        for pos in 0..=rest.len() {
            let mut v = rest.clone();
            v.insert(pos, m - 1);
            out.push(v);
        }
    }
    out
}

/// Two-point coefficient `g_k` of the collocated pair (equal rates).
pub fn coll_g(params: &CollocatedParams, k: f64) -> C64 {
    let (w1, w2) = params.frequencies();
    let gc = params.gamma_c;
    let numer = C64::new(0.0, -2.0 * gc * (k - params.omega_c));
    let denom = C64::new(k - w1, gc / 2.0) * C64::new(k - w2, gc / 2.0) + gc * gc / 4.0;
    numer / denom
}

/// One-photon S coefficient of the collocated pair (equal rates).
pub fn coll_s(params: &CollocatedParams, k: f64) -> C64 {
    let (w1, w2) = params.frequencies();
    let gc = params.gamma_c;
    let q = gc * gc / 4.0;
    let numer = C64::new(k - w1, -gc / 2.0) * C64::new(k - w2, -gc / 2.0) + q;
    let denom = C64::new(k - w1, gc / 2.0) * C64::new(k - w2, gc / 2.0) + q;
    numer / denom
}

/// Exact four-point connected amplitude of the collocated pair, valid for
/// equal rates (`γ_d = 0`).
pub fn coll_four_point(params: &CollocatedParams, k: [f64; 2], p: [f64; 2]) -> C64 {
    let (wc, wd, gc) = (params.omega_c, params.omega_d, params.gamma_c);
    let e = k[0] + k[1];
    let x = e - 2.0 * wc;
    let i = C64::new(0.0, 1.0);
    let gs = coll_g(params, k[0]) * coll_g(params, k[1]) * coll_g(params, p[0]) * coll_g(params, p[1]);
    let detunings = (k[0] - wc) * (k[1] - wc) * (p[0] - wc) * (p[1] - wc);
    let shifted = C64::new(x, 2.0 * gc);
    let dk = k[0] - k[1];
    let dp = p[0] - p[1];
    let f2 = x * (shifted * shifted * 2.0 + dk * dk + dp * dp + 4.0 * gc * gc) / detunings;
    let f4 = -(C64::new(3.0 * x, 2.0 * gc) * 4.0) / detunings;
    let bracket = shifted * 4.0 + f2 * (wd * wd) + f4 * (wd * wd * wd * wd);
    i / (32.0 * PI * gc * gc) * (x / C64::new(x, gc)) * gs * bracket
}

/// Reduced form of [`coll_four_point`] with the `(k − ω_c)` factors of the
/// `g`'s cancelled against the `f` denominators; regular at `k = ω_c`.
pub fn coll_four_point_regular(params: &CollocatedParams, k: [f64; 2], p: [f64; 2]) -> C64 {
    let (w1, w2) = params.frequencies();
    let (wc, wd, gc) = (params.omega_c, params.omega_d, params.gamma_c);
    let e = k[0] + k[1];
    let x = e - 2.0 * wc;
    let i = C64::new(0.0, 1.0);
    let h =
        |q: f64| C64::new(0.0, -2.0 * gc) / (C64::new(q - w1, gc / 2.0) * C64::new(q - w2, gc / 2.0) + gc * gc / 4.0);
    let hs = h(k[0]) * h(k[1]) * h(p[0]) * h(p[1]);
    let detunings = (k[0] - wc) * (k[1] - wc) * (p[0] - wc) * (p[1] - wc);
    let shifted = C64::new(x, 2.0 * gc);
    let dk = k[0] - k[1];
    let dp = p[0] - p[1];
    let bracket = shifted * 4.0 * detunings
        + x * (shifted * shifted * 2.0 + dk * dk + dp * dp + 4.0 * gc * gc) * (wd * wd)
        - C64::new(3.0 * x, 2.0 * gc) * 4.0 * (wd * wd * wd * wd);
    i / (32.0 * PI * gc * gc) * (x / C64::new(x, gc)) * hs * bracket
}

/// `|Δk|` (equivalently `|Δp|`) of the dimer correlation peaks:
/// `|±2J − U/2 + √(4J² + U²/4)|`, returned as `[plus, minus]`.
pub fn dimer_peaks(kerr: f64, hopping: f64) -> [f64; 2] {
    let s = libm::sqrt(4.0 * hopping * hopping + kerr * kerr / 4.0);
    [(2.0 * hopping - kerr / 2.0 + s).abs(), (-2.0 * hopping - kerr / 2.0 + s).abs()]
}

/// Total input energy that probes the lowest doubly excited dimer state,
/// `2ω₀ + U/2 − √(4J² + U²/4)`.
pub fn dimer_probe_energy(omega0: f64, kerr: f64, hopping: f64) -> f64 {
    2.0 * omega0 + kerr / 2.0 - libm::sqrt(4.0 * hopping * hopping + kerr * kerr / 4.0)
}

/// Largest real part in a spectrum, e.g. the highest doubly excited level.
pub fn highest_level(spectrum: &Spectrum) -> Option<f64> {
    spectrum.eigenvalues.iter().map(|e| e.re).reduce(f64::max)
}
