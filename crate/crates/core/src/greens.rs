//! Connected 2m-point Green's functions from scattering diagrams.
//!
//! Each diagram is a time ordering of `m` creations (input photons) and `m`
//! annihilations (output photons). For a concrete assignment of momenta to
//! its arrows the amplitude is the vacuum-to-vacuum chain
//!
//! ```text
//! ⟨0| O_2m R(K_2m-1) O_2m-1 ... R(K_1) O_1 |0⟩ · (−i) / (2π)^(m−1)
//! ```
//!
//! where `O` are port operators (`P†` for inputs, `P` for outputs), `K_j` is
//! the running momentum after `j` arrows and `R(K) = (K − H_eff)^-1` on the
//! current manifold, applied in the biorthogonal eigenbasis. All `m!·m!`
//! assignments are summed for every diagram.
//!
//! A segment at the vacuum contributes `1/K` with a real pole. The poles
//! cancel between assignments, but only if every assignment is evaluated at
//! the same point, so the regulator is applied to the momenta rather than to
//! individual propagators: input momenta get imaginary parts `±η·s_a` with
//! `Σ s_a = 0` and every proper subset sum nonzero. The connected amplitude
//! is the mean of the `+η` and `−η` evaluations, which differs from the
//! pole-free limit by `O(η²)`.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};

use nalgebra::{DMatrix, DVector};

use crate::diagrams::{enumerate_diagrams, Diagram, Step};
use crate::error::{Error, Result};
use crate::fockspace::{effective_hamiltonian_block, port_block, SystemSpec};
use crate::spectral::{decompose, Spectrum};
use crate::C64;

/// Largest photon number accepted by [`GreensEngine::new`].
pub const DEFAULT_MAX_ORDER: usize = 4;

/// `|Σk − Σp|` allowed, relative to the system energy scale.
pub const SHELL_TOLERANCE: f64 = 1e-9;

/// Default regulator relative to the largest decay rate.
pub const DEFAULT_ETA: f64 = 1e-6;

/// Relative change tolerated when the regulator is halved.
pub const INSTABILITY_TOLERANCE: f64 = 1e-4;

/// Non-vacuum denominators below this (times the energy scale) are singular.
pub const SINGULAR_DENOMINATOR: f64 = 1e-12;

/// Vacuum partial sums closer than this many regulators to zero trigger the
/// halved-regulator stability check.
const POLE_WINDOW: f64 = 1e3;

/// Amplitudes below this fraction of `γ^(1−m)` are rounding noise and are
/// exempt from the stability check.
const NOISE_FLOOR: f64 = 1e-8;

/// Channels and momenta of one `m`-photon scattering event.
#[derive(Clone, Debug, PartialEq)]
pub struct ScatterConfig {
    pub in_channels: Vec<String>,
    pub out_channels: Vec<String>,
    pub k: Vec<f64>,
    pub p: Vec<f64>,
}

impl ScatterConfig {
    pub fn new(in_channels: Vec<String>, out_channels: Vec<String>, k: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        let m = k.len();
        if m == 0 {
            return Err(Error::InvalidArgument("at least one photon is required".into()));
        }
        if p.len() != m || in_channels.len() != m || out_channels.len() != m {
            return Err(Error::InvalidArgument(format!(
                "photon counts disagree: {} input channels, {} output channels, {} k, {} p",
                in_channels.len(),
                out_channels.len(),
                m,
                p.len()
            )));
        }
        if k.iter().chain(&p).any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("momenta must be finite".into()));
        }
        Ok(ScatterConfig { in_channels, out_channels, k, p })
    }

    /// Same channel for every input and for every output photon.
    pub fn uniform(in_channel: &str, out_channel: &str, k: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        let m = k.len();
        ScatterConfig::new(vec![String::from(in_channel); m], vec![String::from(out_channel); m], k, p)
    }

    pub fn order(&self) -> usize {
        self.k.len()
    }

    /// `Σk − Σp`.
    pub fn mismatch(&self) -> f64 {
        self.k.iter().sum::<f64>() - self.p.iter().sum::<f64>()
    }
}

/// Coefficient of `δ(Σk − Σp)` in the connected Green's function, including
/// the `−i/(2π)^(m−1)` prefactor and all `√γ` port factors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConnectedAmplitude {
    pub value: C64,
    pub m: usize,
}

/// Running momenta `K_1 .. K_2m−1` along a diagram.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialSums(pub Vec<f64>);

/// `K_j` for momenta assigned to the arrows in time order: `k_assigned[i]`
/// rides the `i`-th creation, `p_assigned[i]` the `i`-th annihilation.
pub fn partial_sums(diagram: &Diagram, k_assigned: &[f64], p_assigned: &[f64]) -> PartialSums {
    let steps = diagram.steps();
    let (mut up, mut down) = (0, 0);
    let mut acc = 0.0;
    let mut sums = Vec::with_capacity(steps.len().saturating_sub(1));
    for step in &steps[..steps.len() - 1] {
        match step {
            Step::Create => {
                acc += k_assigned[up];
                up += 1;
            }
            Step::Annihilate => {
                acc -= p_assigned[down];
                down += 1;
            }
        }
        sums.push(acc);
    }
    PartialSums(sums)
}

/// All permutations of `0..m` in lexicographic order.
pub fn permutations(m: usize) -> Vec<Vec<usize>> {
    let mut current: Vec<usize> = (0..m).collect();
    let mut out = vec![current.clone()];
    loop {
        let Some(i) = (1..m).rev().find(|&i| current[i - 1] < current[i]) else {
            return out;
        };
        let j = (i..m).rev().find(|&j| current[j] > current[i - 1]).unwrap();
        current.swap(i - 1, j);
        current[i..].reverse();
        out.push(current.clone());
    }
}

/// Imaginary-shift pattern for the input momenta: every nonempty proper
/// subset has a nonzero sum and the full set sums to zero.
fn shift_pattern(m: usize) -> Vec<f64> {
    if m <= 1 {
        return vec![0.0; m];
    }
    let mut s: Vec<f64> = (0..m - 1).map(|i| (1u64 << i) as f64).collect();
    let total: f64 = s.iter().sum();
    s.push(-total);
    s
}

/// Spectra of every manifold a diagram can visit, with the port operators
/// pre-transformed into the biorthogonal eigenbases.
#[derive(Clone, Debug)]
pub struct GreensEngine {
    spec: SystemSpec,
    max_order: usize,
    spectra: Vec<Spectrum>,
    /// `raise[l][port] = L_{l+1} P† R_l`
    raise: Vec<Vec<DMatrix<C64>>>,
    /// `lower[l][port] = L_{l−1} P R_l`, empty at `l = 0`
    lower: Vec<Vec<DMatrix<C64>>>,
    eta: f64,
    scale: f64,
}

impl GreensEngine {
    /// Engine for up to `max_order` photons (at most [`DEFAULT_MAX_ORDER`]).
    pub fn new(spec: &SystemSpec, max_order: usize) -> Result<Self> {
        if max_order > DEFAULT_MAX_ORDER {
            return Err(Error::InvalidArgument(format!(
                "photon number {max_order} exceeds the default limit {DEFAULT_MAX_ORDER}; \
                 use GreensEngine::with_high_order to override"
            )));
        }
        Self::with_high_order(spec, max_order)
    }

    /// Like [`GreensEngine::new`] without the photon-number limit. Cost grows
    /// as `(m!)² · Catalan(m)` per evaluation.
    pub fn with_high_order(spec: &SystemSpec, max_order: usize) -> Result<Self> {
        if max_order == 0 || max_order > 64 {
            return Err(Error::InvalidArgument(format!("photon number must be between 1 and 64, got {max_order}")));
        }
        let top = spec.max_excitation().map_or(max_order, |cap| cap.min(max_order));
        let spectra =
            (0..=top).map(|n| decompose(&effective_hamiltonian_block(spec, n))).collect::<Result<Vec<_>>>()?;

        let ports = spec.ports().len();
        let mut raise = Vec::with_capacity(top + 1);
        let mut lower = Vec::with_capacity(top + 1);
        for level in 0..=top {
            let mut up = Vec::new();
            let mut down = Vec::new();
            for port in 0..ports {
                if level < top {
                    let p = port_block(spec, port, level + 1)?.entries;
                    up.push(&spectra[level + 1].left * p.adjoint() * &spectra[level].right);
                }
                if level > 0 {
                    let p = port_block(spec, port, level)?.entries;
                    down.push(&spectra[level - 1].left * p * &spectra[level].right);
                }
            }
            raise.push(up);
            lower.push(down);
        }

        let rate = spec.max_rate();
        let scale = spec.energy_scale();
        let eta = DEFAULT_ETA * if rate > 0.0 { rate } else { scale };
        Ok(GreensEngine { spec: spec.clone(), max_order, spectra, raise, lower, eta, scale })
    }

    /// Replace the vacuum-pole regulator.
    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::InvalidArgument(format!("regulator must be positive, got {eta}")));
        }
        self.eta = eta;
        Ok(self)
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Spectra of manifolds `0..=top_level()`.
    pub fn spectra(&self) -> &[Spectrum] {
        &self.spectra
    }

    pub fn top_level(&self) -> usize {
        self.spectra.len() - 1
    }

    /// Diagram cap for `m` photons: the highest manifold both reachable and
    /// present in the Hilbert space.
    pub fn diagram_cap(&self, m: usize) -> usize {
        m.min(self.top_level())
    }

    pub fn diagrams(&self, m: usize) -> Vec<Diagram> {
        enumerate_diagrams(m, self.diagram_cap(m))
    }

    fn resolve(&self, config: &ScatterConfig) -> Result<(Vec<usize>, Vec<usize>)> {
        let m = config.order();
        if m > self.max_order {
            return Err(Error::InvalidArgument(format!(
                "engine was built for at most {} photons, got {m}",
                self.max_order
            )));
        }
        let ins = config.in_channels.iter().map(|c| self.spec.port_index(c)).collect::<Result<Vec<_>>>()?;
        let outs = config.out_channels.iter().map(|c| self.spec.port_index(c)).collect::<Result<Vec<_>>>()?;
        Ok((ins, outs))
    }

    fn check_shell(&self, config: &ScatterConfig) -> Result<()> {
        let mismatch = config.mismatch();
        if mismatch.abs() > SHELL_TOLERANCE * self.scale {
            return Err(Error::OffShell { mismatch });
        }
        Ok(())
    }

    fn propagate(&self, level: usize, total: C64, v: &mut DVector<C64>) -> Result<()> {
        if level == 0 {
            v[0] /= total;
            return Ok(());
        }
        let norm = v.norm();
        for (x, eps) in v.iter_mut().zip(&self.spectra[level].eigenvalues) {
            let denom = total - eps;
            if denom.norm() < SINGULAR_DENOMINATOR * self.scale {
                // an unpopulated eigenstate contributes nothing
                if x.norm() <= SINGULAR_DENOMINATOR * norm {
                    *x = C64::new(0.0, 0.0);
                    continue;
                }
                return Err(Error::NonFinite { level, denominator: denom.norm() });
            }
            *x /= denom;
        }
        Ok(())
    }

    /// One assignment of one diagram, without the `−i/(2π)^(m−1)` prefactor.
    fn chain(
        &self,
        steps: &[Step],
        ins: &[usize],
        outs: &[usize],
        k: &[C64],
        p: &[f64],
        k_order: &[usize],
        p_order: &[usize],
    ) -> Result<C64> {
        let mut v = DVector::from_element(1, C64::new(1.0, 0.0));
        let (mut level, mut up, mut down) = (0usize, 0usize, 0usize);
        let mut total = C64::new(0.0, 0.0);
        let (mut used_k, mut used_p) = (0u64, 0u64);
        let last = steps.len() - 1;
        for (j, step) in steps.iter().enumerate() {
            match step {
                Step::Create => {
                    let a = k_order[up];
                    up += 1;
                    v = &self.raise[level][ins[a]] * v;
                    level += 1;
                    total += k[a];
                    used_k |= 1 << a;
                }
                Step::Annihilate => {
                    let b = p_order[down];
                    down += 1;
                    v = &self.lower[level][outs[b]] * v;
                    level -= 1;
                    total -= p[b];
                    used_p |= 1 << b;
                }
            }
            if level == 0 && j < last {
                total = vacuum_momentum(k, p, used_k, used_p);
            }
            if j < last {
                self.propagate(level, total, &mut v)?;
            }
        }
        Ok(v[0])
    }

    /// Sum over all momentum assignments of one diagram with the input
    /// momenta displaced by `i·eta·s_a`. `eta = 0` evaluates on the real axis,
    /// which is singular on vacuum-pole hyperplanes.
    pub fn evaluate_diagram_shifted(&self, diagram: &Diagram, config: &ScatterConfig, eta: f64) -> Result<C64> {
        let (ins, outs) = self.resolve(config)?;
        self.check_shell(config)?;
        let m = config.order();
        if diagram.order() != m {
            return Err(Error::InvalidArgument(format!(
                "diagram has {} photons, configuration has {m}",
                diagram.order()
            )));
        }
        if diagram.max_level() > self.top_level() {
            return Ok(C64::new(0.0, 0.0));
        }
        self.sum_assignments(diagram, &ins, &outs, config, eta)
    }

    fn sum_assignments(
        &self,
        diagram: &Diagram,
        ins: &[usize],
        outs: &[usize],
        config: &ScatterConfig,
        eta: f64,
    ) -> Result<C64> {
        let m = config.order();
        let shifts = shift_pattern(m);
        let k: Vec<C64> = config.k.iter().zip(&shifts).map(|(&k, &s)| C64::new(k, eta * s)).collect();
        let perms = permutations(m);
        let mut acc = C64::new(0.0, 0.0);
        for k_order in &perms {
            for p_order in &perms {
                acc += self.chain(diagram.steps(), ins, outs, &k, &config.p, k_order, p_order)?;
            }
        }
        Ok(acc * prefactor(m))
    }

    /// Regulated value of one diagram: mean of the `±eta` displaced sums for
    /// diagrams that revisit the vacuum, the plain sum otherwise.
    pub fn evaluate_diagram(&self, diagram: &Diagram, config: &ScatterConfig, eta: f64) -> Result<C64> {
        if !diagram.crosses_vacuum() {
            return self.evaluate_diagram_shifted(diagram, config, 0.0);
        }
        let plus = self.evaluate_diagram_shifted(diagram, config, eta)?;
        let minus = self.evaluate_diagram_shifted(diagram, config, -eta)?;
        Ok((plus + minus) * 0.5)
    }

    /// Smallest `|K|` over vacuum segments of all diagrams and assignments.
    pub fn nearest_vacuum_pole(&self, config: &ScatterConfig) -> Option<f64> {
        let m = config.order();
        let perms = permutations(m);
        let mut nearest: Option<f64> = None;
        let mut k_assigned = vec![0.0; m];
        let mut p_assigned = vec![0.0; m];
        for diagram in self.diagrams(m).iter().filter(|d| d.crosses_vacuum()) {
            let levels = diagram.levels();
            for k_order in &perms {
                for p_order in &perms {
                    for i in 0..m {
                        k_assigned[i] = config.k[k_order[i]];
                        p_assigned[i] = config.p[p_order[i]];
                    }
                    let sums = partial_sums(diagram, &k_assigned, &p_assigned);
                    for (sum, &level) in sums.0.iter().zip(&levels) {
                        if level == 0 {
                            let d = sum.abs();
                            nearest = Some(nearest.map_or(d, |n: f64| n.min(d)));
                        }
                    }
                }
            }
        }
        nearest
    }

    fn connected_with_eta(
        &self,
        ins: &[usize],
        outs: &[usize],
        config: &ScatterConfig,
        eta: f64,
    ) -> Result<(C64, f64)> {
        let m = config.order();
        let mut acc = C64::new(0.0, 0.0);
        let mut magnitude = 0.0;
        for diagram in self.diagrams(m) {
            let term = if diagram.crosses_vacuum() {
                let plus = self.sum_assignments(&diagram, ins, outs, config, eta)?;
                let minus = self.sum_assignments(&diagram, ins, outs, config, -eta)?;
                (plus + minus) * 0.5
            } else {
                self.sum_assignments(&diagram, ins, outs, config, 0.0)?
            };
            acc += term;
            magnitude += term.norm();
        }
        Ok((acc, magnitude))
    }

    /// Connected `2m`-point amplitude, summed over every diagram the system
    /// supports. Near a vacuum pole the result is recomputed with half the
    /// regulator and rejected if it moves by more than
    /// [`INSTABILITY_TOLERANCE`] of the summed diagram magnitudes (the total
    /// itself may cancel to zero), or of a small floor when every diagram
    /// vanishes.
    pub fn connected_green(&self, config: &ScatterConfig) -> Result<ConnectedAmplitude> {
        let (ins, outs) = self.resolve(config)?;
        self.check_shell(config)?;
        let m = config.order();
        let (value, magnitude) = self.connected_with_eta(&ins, &outs, config, self.eta)?;
        let near_pole = self.nearest_vacuum_pole(config).is_some_and(|d| d < POLE_WINDOW * self.eta);
        if near_pole {
            let (half, _) = self.connected_with_eta(&ins, &outs, config, 0.5 * self.eta)?;
            let rate = self.spec.max_rate();
            let natural = libm::pow(if rate > 0.0 { rate } else { self.scale }, 1.0 - m as f64);
            let size = magnitude.max(NOISE_FLOOR * natural);
            if size > 0.0 {
                let relative_change = (value - half).norm() / size;
                if relative_change > INSTABILITY_TOLERANCE {
                    return Err(Error::InstabilityDetected { relative_change });
                }
            }
        }
        Ok(ConnectedAmplitude { value, m })
    }
}

/// Momentum on a mid-path vacuum segment after absorbing the photons in
/// `used_k` and emitting those in `used_p`, as half the difference between
/// the used and the unused subsets. Swapping the subsets negates the result
/// exactly, so paired vacuum poles cancel even when rounding leaves the
/// momenta slightly off the energy shell.
fn vacuum_momentum(k: &[C64], p: &[f64], used_k: u64, used_p: u64) -> C64 {
    let mut used = C64::new(0.0, 0.0);
    let mut unused = C64::new(0.0, 0.0);
    for (a, &ka) in k.iter().enumerate() {
        if used_k & (1 << a) != 0 {
            used += ka;
        } else {
            unused += ka;
        }
    }
    for (b, &pb) in p.iter().enumerate() {
        if used_p & (1 << b) != 0 {
            used -= pb;
        } else {
            unused -= pb;
        }
    }
    (used - unused) * 0.5
}

/// `−i / (2π)^(m−1)`.
pub fn prefactor(m: usize) -> C64 {
    let two_pi = 2.0 * core::f64::consts::PI;
    C64::new(0.0, -1.0) / libm::pow(two_pi, (m as f64) - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagrams::parse_label;
    use crate::fockspace::{Hop, ModeSpec, Port, PortTerm};
    use core::f64::consts::PI;

    fn two_level(w: f64, g: f64) -> SystemSpec {
        SystemSpec::new(
            vec![ModeSpec::two_level(w)],
            vec![],
            vec![Port::new("L", vec![PortTerm::from_rate(0, g)]), Port::new("R", vec![PortTerm::from_rate(0, g)])],
        )
        .unwrap()
    }

    fn dimer(u: f64) -> SystemSpec {
        SystemSpec::new(
            vec![ModeSpec::boson(100.0, u), ModeSpec::boson(100.0, u)],
            vec![Hop { i: 0, j: 1, strength: 1.0 }],
            vec![
                Port::new("L", vec![PortTerm::from_rate(0, 0.25)]),
                Port::new("R", vec![PortTerm::from_rate(1, 0.25)]),
            ],
        )
        .unwrap()
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn rule_two_partial_sums() {
        // ⟨a a a† a† a a†⟩ with k1..k3 and p1..p3 in natural order
        let d = parse_label("⟨a a a† a† a a†⟩").unwrap();
        let (k, p) = ([1.0, 10.0, 100.0], [0.5, 7.0, 103.5]);
        let sums = partial_sums(&d, &k, &p).0;
        assert_eq!(sums, vec![1.0, 0.5, 10.5, 110.5, 103.5]);
        // last partial sum equals the final outgoing momentum on shell
        assert_eq!(sums[4], p[2]);
    }

    #[test]
    fn permutation_order() {
        let perms = permutations(3);
        assert_eq!(perms.len(), 6);
        assert_eq!(perms[0], vec![0, 1, 2]);
        assert_eq!(perms[5], vec![2, 1, 0]);
        assert_eq!(permutations(1), vec![vec![0]]);
    }

    #[test]
    fn shift_subsets_never_vanish() {
        for m in 2..6 {
            let s = shift_pattern(m);
            assert_eq!(s.iter().sum::<f64>(), 0.0);
            for mask in 1..(1u32 << m) - 1 {
                let sum: f64 = (0..m).filter(|i| mask & (1 << i) != 0).map(|i| s[i]).sum();
                assert!(sum != 0.0);
            }
        }
    }

    #[test]
    fn two_point_transmission() {
        let (w, g) = (2.0, 0.3);
        let engine = GreensEngine::new(&two_level(w, g), 2).unwrap();
        for k in [1.0, 2.0, 2.3, 5.0] {
            let cfg = ScatterConfig::uniform("L", "R", vec![k], vec![k]).unwrap();
            let got = engine.connected_green(&cfg).unwrap().value;
            let want = c(0.0, -g) / (c(k - w, g));
            assert!((got - want).norm() < 1e-14 * want.norm(), "{got} vs {want}");
        }
    }

    #[test]
    fn two_level_resonant_four_point() {
        let (w, g) = (2.0, 0.3);
        let engine = GreensEngine::new(&two_level(w, g), 2).unwrap();
        let cfg = ScatterConfig::uniform("L", "R", vec![w, w], vec![w, w]).unwrap();
        let got = engine.connected_green(&cfg).unwrap().value;
        let want = c(-2.0 / (PI * g), 0.0);
        assert!((got - want).norm() < 1e-8 * want.norm(), "{got} vs {want}");
    }

    #[test]
    fn linear_dimer_vanishes() {
        // four-point amplitudes carry units of 1/γ
        let engine = GreensEngine::new(&dimer(0.0), 2).unwrap();
        let scale = 1.0 / 0.25;
        for (k1, k2, p1) in [(99.0, 100.5, 99.7), (100.2, 100.2, 100.2), (98.0, 103.0, 101.0)] {
            let cfg = ScatterConfig::uniform("L", "R", vec![k1, k2], vec![p1, k1 + k2 - p1]).unwrap();
            let zero = engine.connected_green(&cfg).unwrap().value;
            assert!(zero.norm() < 1e-10 * scale, "{zero}");
        }
    }

    #[test]
    fn explicit_eigen_sum_matches_chain() {
        // dims 2 and 3 for the dimer; sum over eigen-index tuples directly
        let spec = dimer(3.0);
        let engine = GreensEngine::new(&spec, 2).unwrap();
        let (k, p) = ([99.3, 100.9], [100.1, 100.1]);
        let sp = engine.spectra();
        let pl = |n| port_block(&spec, 0, n).unwrap().entries;
        let pr = |n| port_block(&spec, 1, n).unwrap().entries;
        let elem = |lhs: usize, op: &DMatrix<C64>, rhs: usize| &sp[lhs].left * op * &sp[rhs].right;

        // ⟨a a a† a†⟩: levels 1, 2, 1
        let c1 = elem(1, &pl(1).adjoint(), 0);
        let c2 = elem(2, &pl(2).adjoint(), 1);
        let a2 = elem(1, &pr(2), 2);
        let a1 = elem(0, &pr(1), 1);
        let mut expected = c(0.0, 0.0);
        for ko in permutations(2) {
            for po in permutations(2) {
                let (ka, kb) = (k[ko[0]], k[ko[1]]);
                let (pa, _) = (p[po[0]], p[po[1]]);
                for e1 in 0..sp[1].dim() {
                    for e2 in 0..sp[2].dim() {
                        for e3 in 0..sp[1].dim() {
                            let w = a1[(0, e3)] * a2[(e3, e2)] * c2[(e2, e1)] * c1[(e1, 0)];
                            let prop = (c(ka, 0.0) - sp[1].eigenvalues[e1])
                                * (c(ka + kb, 0.0) - sp[2].eigenvalues[e2])
                                * (c(ka + kb - pa, 0.0) - sp[1].eigenvalues[e3]);
                            expected += w / prop;
                        }
                    }
                }
            }
        }
        expected *= prefactor(2);
        let d = parse_label("⟨a a a† a†⟩").unwrap();
        let cfg = ScatterConfig::uniform("L", "R", k.to_vec(), p.to_vec()).unwrap();
        let got = engine.evaluate_diagram(&d, &cfg, engine.eta()).unwrap();
        assert!((got - expected).norm() < 1e-12 * expected.norm(), "{got} vs {expected}");
    }

    #[test]
    fn pole_hyperplane_is_regular() {
        let (w, g) = (2.0, 0.3);
        let engine = GreensEngine::new(&two_level(w, g), 2).unwrap();
        let on = ScatterConfig::uniform("L", "L", vec![1.7, 2.4], vec![1.7, 2.4]).unwrap();
        let near = ScatterConfig::uniform("L", "L", vec![1.7, 2.4], vec![1.7 + 1e-4, 2.4 - 1e-4]).unwrap();
        let a = engine.connected_green(&on).unwrap().value;
        let b = engine.connected_green(&near).unwrap().value;
        assert!(a.re.is_finite() && a.im.is_finite());
        assert!((a - b).norm() < 1e-3 * a.norm());
    }

    #[test]
    fn rounding_off_the_shell_on_a_pole() {
        let engine = GreensEngine::new(&dimer(0.0), 2).unwrap();
        let (p1, p2) = (99.0, 99.05f64);
        let k2 = f64::from_bits(p2.to_bits() + 1);
        let cfg = ScatterConfig::uniform("L", "R", vec![p1, k2], vec![p1, p2]).unwrap();
        let zero = engine.connected_green(&cfg).unwrap().value;
        assert!(zero.norm() < 1e-10 / 0.25, "{zero}");
    }

    #[test]
    fn off_shell_is_rejected() {
        let engine = GreensEngine::new(&two_level(1.0, 0.1), 2).unwrap();
        let cfg = ScatterConfig::uniform("L", "R", vec![1.0, 1.0], vec![1.0, 1.1]).unwrap();
        assert!(matches!(engine.connected_green(&cfg), Err(Error::OffShell { .. })));
    }

    #[test]
    fn unknown_channel_and_order_limits() {
        let spec = two_level(1.0, 0.1);
        let engine = GreensEngine::new(&spec, 2).unwrap();
        let cfg = ScatterConfig::uniform("X", "R", vec![1.0], vec![1.0]).unwrap();
        assert!(matches!(engine.connected_green(&cfg), Err(Error::UnknownChannel(_))));
        let cfg = ScatterConfig::uniform("L", "R", vec![1.0; 3], vec![1.0; 3]).unwrap();
        assert!(engine.connected_green(&cfg).is_err());
        assert!(GreensEngine::new(&spec, 5).is_err());
        assert!(GreensEngine::with_high_order(&spec, 5).is_ok());
    }

    #[test]
    fn dark_state_on_resonance() {
        // identical collocated atoms: the subradiant state has a real
        // eigenvalue but no overlap with the port
        let (wc, gc) = (12.0, 0.25);
        let spec = SystemSpec::new(
            vec![ModeSpec::two_level(wc), ModeSpec::two_level(wc)],
            vec![],
            vec![Port::new("W", vec![PortTerm::from_rate(0, gc), PortTerm::from_rate(1, gc)])],
        )
        .unwrap();
        let engine = GreensEngine::new(&spec, 2).unwrap();
        let cfg = ScatterConfig::uniform("W", "W", vec![wc], vec![wc]).unwrap();
        let g = engine.connected_green(&cfg).unwrap().value;
        assert!((g - c(-2.0, 0.0)).norm() < 1e-12, "{g}");
    }

    #[test]
    fn repeated_evaluation_is_bit_identical() {
        let engine = GreensEngine::new(&dimer(4.0), 2).unwrap();
        let cfg = ScatterConfig::uniform("L", "R", vec![99.1, 100.8], vec![99.6, 100.3]).unwrap();
        let a = engine.connected_green(&cfg).unwrap().value;
        let b = engine.connected_green(&cfg).unwrap().value;
        assert_eq!(a.re.to_bits(), b.re.to_bits());
        assert_eq!(a.im.to_bits(), b.im.to_bits());
    }
}
