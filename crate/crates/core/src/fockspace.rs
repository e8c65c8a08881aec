//! Fixed-excitation Fock manifolds and the operator blocks acting on them.
//!
//! Every Hamiltonian handled here conserves the total excitation number, so
//! all operators are stored as blocks between manifolds of definite `n`:
//! annihilators map `n -> n-1`, the effective Hamiltonian maps `n -> n`.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::C64;

/// Statistics of a single system mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeKind {
    /// Hard-core boson: occupation 0 or 1, acts as a two-level emitter.
    TwoLevel,
    Boson,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeSpec {
    pub kind: ModeKind,
    pub frequency: f64,
    /// On-site Kerr strength `U`, ignored for two-level modes.
    pub kerr: f64,
    /// Free-space loss rate `Γ`.
    pub loss: f64,
}

impl ModeSpec {
    pub fn two_level(frequency: f64) -> Self {
        ModeSpec { kind: ModeKind::TwoLevel, frequency, kerr: 0.0, loss: 0.0 }
    }

    pub fn boson(frequency: f64, kerr: f64) -> Self {
        ModeSpec { kind: ModeKind::Boson, frequency, kerr, loss: 0.0 }
    }

    pub fn with_loss(mut self, loss: f64) -> Self {
        self.loss = loss;
        self
    }
}

/// Symmetric hopping `J (a_i† a_j + a_j† a_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Hop {
    pub i: usize,
    pub j: usize,
    pub strength: f64,
}

/// One system operator contributing to a port, weighted by `√γ`.
#[derive(Clone, Debug, PartialEq)]
pub struct PortTerm {
    pub mode: usize,
    pub amplitude: f64,
}

impl PortTerm {
    /// Term coupling `mode` with decay rate `gamma` (amplitude `√γ`).
    pub fn from_rate(mode: usize, gamma: f64) -> Self {
        PortTerm { mode, amplitude: libm::sqrt(gamma) }
    }

    pub fn rate(&self) -> f64 {
        self.amplitude * self.amplitude
    }
}

/// A waveguide channel. Its port operator is `P = Σ √γ_j a_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Port {
    pub label: String,
    pub terms: Vec<PortTerm>,
}

impl Port {
    pub fn new(label: impl Into<String>, terms: Vec<PortTerm>) -> Self {
        Port { label: label.into(), terms }
    }
}

/// Declarative description of a waveguide-coupled system.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemSpec {
    modes: Vec<ModeSpec>,
    hops: Vec<Hop>,
    ports: Vec<Port>,
    boson_cap: Option<u32>,
}

impl SystemSpec {
    pub fn new(modes: Vec<ModeSpec>, hops: Vec<Hop>, ports: Vec<Port>) -> Result<Self> {
        let spec = SystemSpec { modes, hops, ports, boson_cap: None };
        spec.validate()?;
        Ok(spec)
    }

    /// Override the per-mode boson occupation cap. The default (the
    /// manifold's own excitation number) is exact; a smaller cap truncates
    /// the Hilbert space.
    pub fn with_boson_cap(mut self, cap: u32) -> Result<Self> {
        if cap == 0 {
            return Err(Error::InvalidSpec("boson cap must be at least 1".into()));
        }
        self.boson_cap = Some(cap);
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if self.modes.is_empty() {
            return bad("at least one mode is required".into());
        }
        if self.ports.is_empty() {
            return bad("at least one port is required".into());
        }
        let n = self.modes.len();
        for (idx, mode) in self.modes.iter().enumerate() {
            if !mode.frequency.is_finite() || !mode.kerr.is_finite() {
                return bad(format!("mode {idx}: non-finite energy"));
            }
            if !(mode.loss >= 0.0) || !mode.loss.is_finite() {
                return bad(format!("mode {idx}: loss must be finite and nonnegative"));
            }
        }
        let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(self.hops.len());
        for hop in &self.hops {
            if hop.i >= n || hop.j >= n {
                return bad(format!("hop ({}, {}) references a missing mode", hop.i, hop.j));
            }
            if hop.i == hop.j {
                return bad(format!("hop ({}, {}) must join distinct modes", hop.i, hop.j));
            }
            if !hop.strength.is_finite() {
                return bad(format!("hop ({}, {}): non-finite strength", hop.i, hop.j));
            }
            let key = (hop.i.min(hop.j), hop.i.max(hop.j));
            if pairs.contains(&key) {
                return bad(format!("hop ({}, {}) listed twice", key.0, key.1));
            }
            pairs.push(key);
        }
        for (idx, port) in self.ports.iter().enumerate() {
            if port.terms.is_empty() {
                return bad(format!("port `{}` has no terms", port.label));
            }
            if self.ports[..idx].iter().any(|p| p.label == port.label) {
                return bad(format!("duplicate port label `{}`", port.label));
            }
            for term in &port.terms {
                if term.mode >= n {
                    return bad(format!("port `{}` references missing mode {}", port.label, term.mode));
                }
                if !(term.amplitude >= 0.0) || !term.amplitude.is_finite() {
                    return bad(format!("port `{}`: amplitude must be finite and nonnegative", port.label));
                }
            }
        }
        Ok(())
    }

    pub fn modes(&self) -> &[ModeSpec] {
        &self.modes
    }

    pub fn hops(&self) -> &[Hop] {
        &self.hops
    }

    pub fn ports(&self) -> &[Port] {
        &self.ports
    }

    pub fn boson_cap(&self) -> Option<u32> {
        self.boson_cap
    }

    pub fn port_index(&self, label: &str) -> Result<usize> {
        self.ports.iter().position(|p| p.label == label).ok_or_else(|| Error::UnknownChannel(label.into()))
    }

    /// Largest excitation number the Hilbert space supports, `None` when
    /// unbounded (any boson without an explicit cap).
    pub fn max_excitation(&self) -> Option<usize> {
        let mut total = 0usize;
        for mode in &self.modes {
            match (mode.kind, self.boson_cap) {
                (ModeKind::TwoLevel, _) => total += 1,
                (ModeKind::Boson, Some(cap)) => total += cap as usize,
                (ModeKind::Boson, None) => return None,
            }
        }
        Some(total)
    }

    /// Characteristic energy of the system, used to scale tolerances.
    pub fn energy_scale(&self) -> f64 {
        let mut scale = 0.0f64;
        for mode in &self.modes {
            scale = scale.max(mode.frequency.abs()).max(mode.kerr.abs()).max(mode.loss);
        }
        for hop in &self.hops {
            scale = scale.max(hop.strength.abs());
        }
        scale.max(self.max_rate()).max(f64::MIN_POSITIVE)
    }

    /// Largest decay rate among port terms and loss channels.
    pub fn max_rate(&self) -> f64 {
        let ports = self.ports.iter().flat_map(|p| p.terms.iter()).map(PortTerm::rate);
        let losses = self.modes.iter().map(|m| m.loss);
        ports.chain(losses).fold(0.0, f64::max)
    }

    fn occupation_cap(&self, mode: usize, n: usize) -> u32 {
        match self.modes[mode].kind {
            ModeKind::TwoLevel => 1,
            ModeKind::Boson => {
                let n = n as u32;
                self.boson_cap.map_or(n, |c| c.min(n))
            }
        }
    }
}

/// Occupation numbers, one per mode.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FockState(pub Vec<u32>);

impl FockState {
    pub fn total(&self) -> usize {
        self.0.iter().map(|&n| n as usize).sum()
    }
}

/// Basis of the `n`-excitation subspace, lexicographically ordered.
#[derive(Clone, Debug, PartialEq)]
pub struct Manifold {
    pub n: usize,
    basis: Vec<FockState>,
}

impl Manifold {
    pub fn basis(&self) -> &[FockState] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// Position of `state` in the basis.
    pub fn index_of(&self, state: &FockState) -> Option<usize> {
        self.basis.binary_search(state).ok()
    }
}

/// Enumerate all occupation vectors with total `n` that respect the per-mode
/// caps, in lexicographic order.
pub fn build_manifold(spec: &SystemSpec, n: usize) -> Manifold {
    let modes = spec.modes.len();
    let caps: Vec<u32> = (0..modes).map(|j| spec.occupation_cap(j, n)).collect();
    // suffix capacity bounds prune dead branches early
    let mut room = vec![0usize; modes + 1];
    for j in (0..modes).rev() {
        room[j] = room[j + 1] + caps[j] as usize;
    }
    let mut basis = Vec::new();
    let mut occ = vec![0u32; modes];
    fill(0, n, &caps, &room, &mut occ, &mut basis);
    Manifold { n, basis }
}

fn fill(mode: usize, left: usize, caps: &[u32], room: &[usize], occ: &mut Vec<u32>, out: &mut Vec<FockState>) {
    if mode == caps.len() {
        if left == 0 {
            out.push(FockState(occ.clone()));
        }
        return;
    }
    if room[mode] < left {
        return;
    }
    let top = (caps[mode] as usize).min(left);
    for k in 0..=top {
        occ[mode] = k as u32;
        fill(mode + 1, left - k, caps, room, occ, out);
    }
    occ[mode] = 0;
}

/// Complex matrix mapping manifold `cols` into manifold `rows`.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorBlock {
    pub rows: usize,
    pub cols: usize,
    pub entries: DMatrix<C64>,
}

impl OperatorBlock {
    pub fn adjoint(&self) -> OperatorBlock {
        OperatorBlock { rows: self.cols, cols: self.rows, entries: self.entries.adjoint() }
    }
}

/// Annihilator of mode `j` from manifold `n` to `n-1`. Two-level modes act
/// as the lowering operator.
pub fn annihilation_block(spec: &SystemSpec, mode: usize, n: usize) -> Result<OperatorBlock> {
    if n == 0 {
        return Err(Error::InvalidArgument("annihilation needs n >= 1".into()));
    }
    if mode >= spec.modes.len() {
        return Err(Error::InvalidArgument(format!("mode {mode} out of range")));
    }
    let source = build_manifold(spec, n);
    let target = build_manifold(spec, n - 1);
    Ok(annihilation_between(&source, &target, mode))
}

fn annihilation_between(source: &Manifold, target: &Manifold, mode: usize) -> OperatorBlock {
    let mut entries = DMatrix::zeros(target.dim(), source.dim());
    let mut lowered = FockState(Vec::new());
    for (col, state) in source.basis.iter().enumerate() {
        let occ = state.0[mode];
        if occ == 0 {
            continue;
        }
        lowered.0.clone_from(&state.0);
        lowered.0[mode] -= 1;
        if let Some(row) = target.index_of(&lowered) {
            entries[(row, col)] = C64::new(libm::sqrt(occ as f64), 0.0);
        }
    }
    OperatorBlock { rows: target.n, cols: source.n, entries }
}

/// Creation operator of mode `j` from manifold `n-1` to `n`.
pub fn creation_block(spec: &SystemSpec, mode: usize, n: usize) -> Result<OperatorBlock> {
    annihilation_block(spec, mode, n).map(|b| b.adjoint())
}

/// Port operator `P = Σ √γ_j a_j` from manifold `n` to `n-1`.
pub fn port_block(spec: &SystemSpec, port: usize, n: usize) -> Result<OperatorBlock> {
    if n == 0 {
        return Err(Error::InvalidArgument("port operator needs n >= 1".into()));
    }
    let port = spec.ports.get(port).ok_or_else(|| Error::InvalidArgument(format!("port {port} out of range")))?;
    let source = build_manifold(spec, n);
    let target = build_manifold(spec, n - 1);
    Ok(port_between(&source, &target, port))
}

fn port_between(source: &Manifold, target: &Manifold, port: &Port) -> OperatorBlock {
    let mut entries = DMatrix::zeros(target.dim(), source.dim());
    for term in &port.terms {
        let a = annihilation_between(source, target, term.mode);
        entries += a.entries * C64::new(term.amplitude, 0.0);
    }
    OperatorBlock { rows: target.n, cols: source.n, entries }
}

/// Effective Hamiltonian restricted to manifold `n`:
/// `H_sys - (i/2) Σ_ports P†P - (i/2) Σ_j Γ_j a_j† a_j`.
pub fn effective_hamiltonian_block(spec: &SystemSpec, n: usize) -> OperatorBlock {
    let manifold = build_manifold(spec, n);
    let dim = manifold.dim();
    let mut h = DMatrix::<C64>::zeros(dim, dim);

    for (col, state) in manifold.basis.iter().enumerate() {
        let mut diag = C64::new(0.0, 0.0);
        for (mode, &occ) in spec.modes.iter().zip(&state.0) {
            let occ = occ as f64;
            diag.re += mode.frequency * occ;
            if mode.kind == ModeKind::Boson {
                diag.re += 0.5 * mode.kerr * occ * (occ - 1.0);
            }
            diag.im -= 0.5 * mode.loss * occ;
        }
        h[(col, col)] += diag;

        let mut moved = FockState(Vec::new());
        for hop in &spec.hops {
            for (from, to) in [(hop.j, hop.i), (hop.i, hop.j)] {
                let occ_from = state.0[from];
                if occ_from == 0 {
                    continue;
                }
                moved.0.clone_from(&state.0);
                moved.0[from] -= 1;
                moved.0[to] += 1;
                if let Some(row) = manifold.index_of(&moved) {
                    let amp = libm::sqrt(occ_from as f64 * moved.0[to] as f64);
                    h[(row, col)] += C64::new(hop.strength * amp, 0.0);
                }
            }
        }
    }

    if n > 0 {
        let lower = build_manifold(spec, n - 1);
        for port in &spec.ports {
            let p = port_between(&manifold, &lower, port).entries;
            h -= (p.adjoint() * p) * C64::new(0.0, 0.5);
        }
    }
    OperatorBlock { rows: n, cols: n, entries: h }
}
