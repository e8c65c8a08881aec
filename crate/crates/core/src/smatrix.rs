//! Full S-matrix elements from connected amplitudes, and scattering of
//! Gaussian wavepackets.
//!
//! Every S-matrix value here is the coefficient of its momentum-conservation
//! deltas; physical outputs resolve the deltas by integrating against the
//! input wavepackets.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::greens::{GreensEngine, ScatterConfig};
use crate::quadrature::{integrate, integrate_with_floor, DEFAULT_TOLERANCE};
use crate::C64;

/// Largest photon number handled by [`cluster_terms`].
pub const MAX_CLUSTER_PHOTONS: usize = 3;

/// Output grids need at least this many points per wavepacket width.
pub const POINTS_PER_WIDTH: f64 = 8.0;

/// Wavepackets are integrated over `center ± SUPPORT_WIDTHS · width`.
const SUPPORT_WIDTHS: f64 = 12.0;

/// Coefficient of `δ(p − k)` in the one-photon S-matrix: the identity for
/// an unchanged channel plus the two-point connected amplitude.
pub fn one_photon_s(engine: &GreensEngine, out_channel: &str, in_channel: &str, k: f64) -> Result<C64> {
    let config = ScatterConfig::uniform(in_channel, out_channel, vec![k], vec![k])?;
    let g = engine.connected_green(&config)?.value;
    let identity = if out_channel == in_channel { 1.0 } else { 0.0 };
    Ok(g + identity)
}

/// One connected factor: the input photons it absorbs and the output
/// photons it emits (0-based indices).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cluster {
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
}

impl Cluster {
    pub fn size(&self) -> usize {
        self.inputs.len()
    }
}

/// One product of connected parts in the cluster expansion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SMatrixTerm {
    pub clusters: Vec<Cluster>,
}

impl SMatrixTerm {
    /// Product of the cluster coefficients for the photons in `config`.
    /// One-photon clusters contribute [`one_photon_s`] at their input
    /// momentum; larger clusters contribute their connected amplitude.
    pub fn coefficient(&self, engine: &GreensEngine, config: &ScatterConfig) -> Result<C64> {
        let mut value = C64::new(1.0, 0.0);
        for cluster in &self.clusters {
            if cluster.inputs.iter().chain(&cluster.outputs).any(|&i| i >= config.order()) {
                return Err(Error::InvalidArgument(format!("term refers to more than {} photons", config.order())));
            }
            if cluster.size() == 1 {
                let (i, o) = (cluster.inputs[0], cluster.outputs[0]);
                value *= one_photon_s(engine, &config.out_channels[o], &config.in_channels[i], config.k[i])?;
            } else {
                let sub = ScatterConfig::new(
                    cluster.inputs.iter().map(|&i| config.in_channels[i].clone()).collect(),
                    cluster.outputs.iter().map(|&o| config.out_channels[o].clone()).collect(),
                    cluster.inputs.iter().map(|&i| config.k[i]).collect(),
                    cluster.outputs.iter().map(|&o| config.p[o]).collect(),
                )?;
                value *= engine.connected_green(&sub)?.value;
            }
        }
        Ok(value)
    }
}

/// Every way of grouping `n` input and `n` output photons into connected
/// clusters of equal in/out size.
pub fn cluster_terms(n: usize) -> Result<Vec<SMatrixTerm>> {
    if n == 0 || n > MAX_CLUSTER_PHOTONS {
        return Err(Error::InvalidArgument(format!(
            "cluster expansion supports 1 to {MAX_CLUSTER_PHOTONS} photons, got {n}"
        )));
    }
    let mut out = Vec::new();
    let inputs: Vec<usize> = (0..n).collect();
    let outputs: Vec<usize> = (0..n).collect();
    expand(&inputs, &outputs, &mut Vec::new(), &mut out);
    Ok(out)
}

fn expand(inputs: &[usize], outputs: &[usize], current: &mut Vec<Cluster>, out: &mut Vec<SMatrixTerm>) {
    let Some((&anchor, rest)) = inputs.split_first() else {
        out.push(SMatrixTerm { clusters: current.clone() });
        return;
    };
    for companions in subsets(rest) {
        let size = companions.len() + 1;
        for chosen in subsets(outputs).into_iter().filter(|s| s.len() == size) {
            let mut cluster_in = vec![anchor];
            cluster_in.extend(&companions);
            let remaining_in: Vec<usize> = rest.iter().copied().filter(|i| !companions.contains(i)).collect();
            let remaining_out: Vec<usize> = outputs.iter().copied().filter(|o| !chosen.contains(o)).collect();
            current.push(Cluster { inputs: cluster_in, outputs: chosen });
            expand(&remaining_in, &remaining_out, current, out);
            current.pop();
        }
    }
}

fn subsets(items: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(1 << items.len());
    for mask in 0..(1usize << items.len()) {
        out.push(items.iter().enumerate().filter(|(b, _)| mask & (1 << b) != 0).map(|(_, &x)| x).collect());
    }
    out
}

/// `|G(p₁,p₂;k₁,k₂)|²` at `k₁,₂ = (E ± Δk)/2`, `p₁,₂ = (E ± Δp)/2`.
pub fn two_photon_density(
    engine: &GreensEngine,
    out_channels: [&str; 2],
    in_channels: [&str; 2],
    energy: f64,
    dk: f64,
    dp: f64,
) -> Result<f64> {
    let config = ScatterConfig::new(
        vec![in_channels[0].into(), in_channels[1].into()],
        vec![out_channels[0].into(), out_channels[1].into()],
        vec![(energy + dk) / 2.0, (energy - dk) / 2.0],
        vec![(energy + dp) / 2.0, (energy - dp) / 2.0],
    )?;
    Ok(engine.connected_green(&config)?.value.norm_sqr())
}

/// Normalized Gaussian single-photon wavepacket in one channel.
#[derive(Clone, Debug, PartialEq)]
pub struct Wavepacket {
    pub channel: String,
    pub center: f64,
    pub width: f64,
}

impl Wavepacket {
    pub fn new(channel: impl Into<String>, center: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() || !center.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "wavepacket needs a finite center and positive width, got {center}, {width}"
            )));
        }
        Ok(Wavepacket { channel: channel.into(), center, width })
    }

    /// `(2πσ²)^(−1/4) exp(−(k − k₀)²/(4σ²))`.
    pub fn amplitude(&self, k: f64) -> f64 {
        let x = k - self.center;
        libm::pow(2.0 * PI * self.width * self.width, -0.25) * libm::exp(-x * x / (4.0 * self.width * self.width))
    }

    /// Interval outside which the amplitude is negligible.
    pub fn support(&self) -> (f64, f64) {
        (self.center - SUPPORT_WIDTHS * self.width, self.center + SUPPORT_WIDTHS * self.width)
    }
}

/// Result of [`wavepacket_output`].
#[derive(Clone, Debug, PartialEq)]
pub enum WavepacketOutput {
    /// `values[c][i]` is the outgoing amplitude in `channels[c]` at
    /// `momenta[i]`. `norm` is the total outgoing probability over all
    /// ports, by quadrature.
    One { channels: Vec<String>, momenta: Vec<f64>, values: Vec<Vec<C64>>, norm: f64 },
    /// `values[i][j]` is `⟨0|b(p₁ = momenta[i]) b(p₂ = momenta[j]) S|in⟩`
    /// for the output channel pair. `grid_norm` is the probability carried
    /// by that channel pair, summed on the grid.
    Two { channels: [String; 2], momenta: Vec<f64>, values: Vec<Vec<C64>>, grid_norm: f64 },
}

/// Scatter one or two Gaussian photons and sample the outgoing amplitude on
/// a uniform momentum grid. For one photon the amplitude is reported in
/// every channel of `out_channels`; for two photons `out_channels` names
/// the channel of each outgoing photon.
pub fn wavepacket_output(
    engine: &GreensEngine,
    inputs: &[Wavepacket],
    out_channels: &[String],
    grid: &[f64],
) -> Result<WavepacketOutput> {
    let narrowest = inputs.iter().map(|w| w.width).fold(f64::INFINITY, f64::min);
    let spacing = check_grid(grid, narrowest)?;
    match inputs {
        [single] => {
            let mut values = Vec::with_capacity(out_channels.len());
            for channel in out_channels {
                values.push(
                    grid.iter()
                        .map(|&p| Ok(one_photon_s(engine, channel, &single.channel, p)? * single.amplitude(p)))
                        .collect::<Result<Vec<_>>>()?,
                );
            }
            let norm = one_photon_norm(engine, single)?;
            Ok(WavepacketOutput::One { channels: out_channels.to_vec(), momenta: grid.to_vec(), values, norm })
        }
        [first, second] => {
            let [o1, o2] = match out_channels {
                [a, b] => [a.clone(), b.clone()],
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "two-photon output needs two channels, got {}",
                        out_channels.len()
                    )))
                }
            };
            let mut values = Vec::with_capacity(grid.len());
            for &p1 in grid {
                let row = grid
                    .iter()
                    .map(|&p2| two_photon_amplitude(engine, [first, second], [&o1, &o2], p1, p2))
                    .collect::<Result<Vec<_>>>()?;
                values.push(row);
            }
            let grid_norm = two_photon_grid_norm(&values, spacing, o1 == o2);
            Ok(WavepacketOutput::Two { channels: [o1, o2], momenta: grid.to_vec(), values, grid_norm })
        }
        _ => Err(Error::InvalidArgument(format!(
            "wavepacket scattering supports one or two photons, got {}",
            inputs.len()
        ))),
    }
}

/// Outgoing probability of one photon summed over all ports.
pub fn one_photon_norm(engine: &GreensEngine, input: &Wavepacket) -> Result<f64> {
    let (lo, hi) = input.support();
    let ports: Vec<String> = engine.spec().ports().iter().map(|p| p.label.clone()).collect();
    let mut failure = None;
    let value = integrate(
        |k| {
            let mut sum = 0.0;
            for port in &ports {
                match one_photon_s(engine, port, &input.channel, k) {
                    Ok(s) => sum += s.norm_sqr(),
                    Err(e) => failure = Some(e),
                }
            }
            let f = input.amplitude(k);
            C64::new(sum * f * f, 0.0)
        },
        lo,
        hi,
        8,
        DEFAULT_TOLERANCE * 1e-2,
    );
    match failure {
        Some(e) => Err(e),
        None => Ok(value.re),
    }
}

/// Two-photon outgoing amplitude at `(p₁, p₂)`: the two elastic pairings
/// plus the connected part integrated over the input momenta on the
/// energy shell.
pub fn two_photon_amplitude(
    engine: &GreensEngine,
    inputs: [&Wavepacket; 2],
    out_channels: [&str; 2],
    p1: f64,
    p2: f64,
) -> Result<C64> {
    let [a, b] = inputs;
    let [o1, o2] = out_channels;
    let direct = one_photon_s(engine, o1, &a.channel, p1)?
        * a.amplitude(p1)
        * one_photon_s(engine, o2, &b.channel, p2)?
        * b.amplitude(p2);
    let exchange = one_photon_s(engine, o1, &b.channel, p1)?
        * b.amplitude(p1)
        * one_photon_s(engine, o2, &a.channel, p2)?
        * a.amplitude(p2);

    let energy = p1 + p2;
    let (lo_a, hi_a) = a.support();
    let (lo_b, hi_b) = b.support();
    let lo = lo_a.max(energy - hi_b);
    let hi = hi_a.min(energy - lo_b);
    let mut connected = C64::new(0.0, 0.0);
    if lo < hi {
        let rate = engine.spec().max_rate().max(f64::MIN_POSITIVE);
        let peak = a.amplitude(a.center) * b.amplitude(b.center);
        let floor = 1e-3 * DEFAULT_TOLERANCE * peak * (hi - lo) / rate;
        let mut failure = None;
        connected = integrate_with_floor(
            |k1| {
                let k2 = energy - k1;
                let config = ScatterConfig::new(
                    vec![a.channel.clone(), b.channel.clone()],
                    vec![o1.into(), o2.into()],
                    vec![k1, k2],
                    vec![p1, p2],
                );
                match config.and_then(|c| engine.connected_green(&c)) {
                    Ok(g) => g.value * a.amplitude(k1) * b.amplitude(k2),
                    Err(e) => {
                        failure = Some(e);
                        C64::new(0.0, 0.0)
                    }
                }
            },
            lo,
            hi,
            8,
            DEFAULT_TOLERANCE,
            floor,
        );
        if let Some(e) = failure {
            return Err(e);
        }
    }
    Ok(direct + exchange + connected)
}

/// Checks that `grid` is uniform and resolves a packet of `width`, and
/// returns its spacing.
pub fn check_grid(grid: &[f64], width: f64) -> Result<f64> {
    if grid.len() < 2 {
        return Err(Error::InvalidArgument("output grid needs at least two points".into()));
    }
    let spacing = grid[1] - grid[0];
    if !(spacing > 0.0) {
        return Err(Error::InvalidArgument("output grid must be increasing".into()));
    }
    let uniform = grid.windows(2).all(|w| ((w[1] - w[0]) - spacing).abs() <= 1e-9 * spacing.max(w[1].abs()));
    if !uniform {
        return Err(Error::InvalidArgument("output grid must be uniformly spaced".into()));
    }
    let required = width / POINTS_PER_WIDTH;
    if spacing > required * (1.0 + 1e-12) {
        return Err(Error::GridTooCoarse { spacing, required });
    }
    Ok(spacing)
}

/// Trapezoid estimate of `∫∫|ψ(p₁,p₂)|²` over a square grid, halved for
/// identical output channels where `(p₁,p₂)` and `(p₂,p₁)` are one state.
pub fn two_photon_grid_norm(values: &[Vec<C64>], spacing: f64, same_channel: bool) -> f64 {
    let weights = trapezoid_weights(values.len(), spacing);
    let mut norm = 0.0;
    for (row, wi) in values.iter().zip(&weights) {
        for (v, wj) in row.iter().zip(&weights) {
            norm += v.norm_sqr() * wi * wj;
        }
    }
    if same_channel {
        0.5 * norm
    } else {
        norm
    }
}

fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    (0..n).map(|i| if i == 0 || i + 1 == n { 0.5 * h } else { h }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_bose_hubbard, build_collocated, build_two_level, tl_one_photon, CollocatedParams};

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol * a.norm().max(b.norm()).max(f64::MIN_POSITIVE)
    }

    fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn two_level_reflection_and_transmission() {
        let (w, g) = (1.0, 0.1);
        let engine = GreensEngine::new(&build_two_level(w, g, g).unwrap(), 1).unwrap();
        let r = one_photon_s(&engine, "L", "L", w).unwrap();
        let t = one_photon_s(&engine, "R", "L", w).unwrap();
        assert!(r.norm() < 1e-14);
        assert!(close(t, C64::new(-1.0, 0.0), 1e-14));
        let r = one_photon_s(&engine, "L", "L", w + g).unwrap();
        let t = one_photon_s(&engine, "R", "L", w + g).unwrap();
        assert!(close(r, C64::new(0.5, -0.5), 1e-13));
        assert!(close(t, C64::new(-0.5, -0.5), 1e-13));
        for k in uniform_grid(0.0, 2.0, 101) {
            let r = one_photon_s(&engine, "L", "L", k).unwrap();
            let t = one_photon_s(&engine, "R", "L", k).unwrap();
            let (r0, t0) = tl_one_photon(w, g, k);
            assert!(close(r, r0, 1e-12) && close(t, t0, 1e-12));
            assert!((r.norm_sqr() + t.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn collocated_single_channel() {
        let params = CollocatedParams::new(12.0, 0.0, 0.25, 0.0).unwrap();
        let engine = GreensEngine::new(&build_collocated(&params).unwrap(), 1).unwrap();
        assert!(close(one_photon_s(&engine, "W", "W", 12.0).unwrap(), C64::new(-1.0, 0.0), 1e-12));
        let detuned = CollocatedParams::new(12.0, 0.8, 0.25, 0.0).unwrap();
        let engine = GreensEngine::new(&build_collocated(&detuned).unwrap(), 1).unwrap();
        for k in uniform_grid(10.0, 14.0, 81) {
            assert!((one_photon_s(&engine, "W", "W", k).unwrap().norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn chain_is_unitary() {
        let spec = build_bose_hubbard(5, 100.0, 4.0, 1.0, 0.25, 0.25, false).unwrap();
        let engine = GreensEngine::new(&spec, 1).unwrap();
        for k in uniform_grid(97.0, 103.0, 61) {
            let r = one_photon_s(&engine, "L", "L", k).unwrap();
            let t = one_photon_s(&engine, "R", "L", k).unwrap();
            assert!((r.norm_sqr() + t.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cluster_counts_and_structure() {
        let counts: Vec<usize> = (1..=3).map(|n| cluster_terms(n).unwrap().len()).collect();
        assert_eq!(counts, vec![1, 3, 16]);
        assert!(cluster_terms(0).is_err() && cluster_terms(4).is_err());
        for n in 1..=3 {
            let terms = cluster_terms(n).unwrap();
            for term in &terms {
                let mut ins: Vec<usize> = term.clusters.iter().flat_map(|c| c.inputs.clone()).collect();
                let mut outs: Vec<usize> = term.clusters.iter().flat_map(|c| c.outputs.clone()).collect();
                ins.sort();
                outs.sort();
                assert_eq!(ins, (0..n).collect::<Vec<_>>());
                assert_eq!(outs, (0..n).collect::<Vec<_>>());
                assert!(term.clusters.iter().all(|c| c.inputs.len() == c.outputs.len()));
            }
            for (i, a) in terms.iter().enumerate() {
                assert!(terms[i + 1..].iter().all(|b| b != a));
            }
        }
        let three = cluster_terms(3).unwrap();
        let shape = |sizes: &[usize]| {
            three
                .iter()
                .filter(|t| {
                    let mut s: Vec<usize> = t.clusters.iter().map(Cluster::size).collect();
                    s.sort();
                    s == sizes
                })
                .count()
        };
        assert_eq!((shape(&[1, 1, 1]), shape(&[1, 2]), shape(&[3])), (6, 9, 1));
    }

    #[test]
    fn term_coefficients() {
        let (w, g) = (1.0, 0.1);
        let engine = GreensEngine::new(&build_two_level(w, g, g).unwrap(), 2).unwrap();
        let config = ScatterConfig::uniform("L", "R", vec![0.9, 1.2], vec![1.2, 0.9]).unwrap();
        let terms = cluster_terms(2).unwrap();
        let t = |k| tl_one_photon(w, g, k).1;
        let swapped =
            terms.iter().find(|term| term.clusters.len() == 2 && term.clusters[0].outputs == vec![1]).unwrap();
        assert!(close(swapped.coefficient(&engine, &config).unwrap(), t(0.9) * t(1.2), 1e-12));
        let connected = terms.iter().find(|term| term.clusters.len() == 1).unwrap();
        let g4 = engine.connected_green(&config).unwrap().value;
        assert_eq!(connected.coefficient(&engine, &config).unwrap(), g4);
    }

    #[test]
    fn densities() {
        let (w, g) = (1.0, 0.1);
        let engine = GreensEngine::new(&build_two_level(w, g, g).unwrap(), 2).unwrap();
        let d = two_photon_density(&engine, ["R", "R"], ["L", "L"], 2.0 * w, 0.0, 0.0).unwrap();
        let expected = libm::pow(2.0 / (PI * g), 2.0);
        assert!((d - expected).abs() < 1e-8 * expected);

        let params = CollocatedParams::new(12.0, 1.0, 0.25, 0.0).unwrap();
        let engine = GreensEngine::new(&build_collocated(&params).unwrap(), 2).unwrap();
        for (dk, dp) in [(0.3, -1.1), (2.0, 0.5), (0.0, 0.0)] {
            let d = two_photon_density(&engine, ["W", "W"], ["W", "W"], 24.0, dk, dp).unwrap();
            assert!(d < 1e-20, "{d}");
        }

        let dimer = build_bose_hubbard(2, 100.0, 0.0, 1.0, 0.25, 0.25, false).unwrap();
        let engine = GreensEngine::new(&dimer, 2).unwrap();
        for (dk, dp) in [(0.3, -1.1), (2.0, 0.5), (4.0, 4.0)] {
            let d = two_photon_density(&engine, ["R", "R"], ["L", "L"], 198.0, dk, dp).unwrap();
            assert!(d.sqrt() < 1e-10 / 0.25, "{d}");
        }
    }

    #[test]
    fn narrow_packet_is_transmitted() {
        let (w, g) = (1.0, 0.1);
        let engine = GreensEngine::new(&build_two_level(w, g, g).unwrap(), 1).unwrap();
        let sigma = g / 50.0;
        let packet = Wavepacket::new("L", w, sigma).unwrap();
        let grid = uniform_grid(w - 12.0 * sigma, w + 12.0 * sigma, 193);
        let out = wavepacket_output(&engine, &[packet.clone()], &["L".into(), "R".into()], &grid).unwrap();
        let WavepacketOutput::One { values, norm, .. } = out else { panic!("expected one photon") };
        assert!((norm - 1.0).abs() < 1e-6);
        let h = grid[1] - grid[0];
        let reflected: f64 = values[0].iter().map(|v| v.norm_sqr() * h).sum();
        let transmitted: f64 = values[1].iter().map(|v| v.norm_sqr() * h).sum();
        assert!(reflected < 2e-3 && (transmitted - 1.0).abs() < 2e-3);

        // reflected probability ∫ |r_k|² |f(k)|² dk ≈ σ²/γ² for σ ≪ γ
        assert!((reflected - sigma * sigma / (g * g)).abs() < 1e-5);

        let coarse = uniform_grid(w - 1.0, w + 1.0, 11);
        assert!(matches!(
            wavepacket_output(&engine, &[packet], &["R".into()], &coarse),
            Err(Error::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn linear_two_photon_output_is_elastic() {
        let dimer = build_bose_hubbard(2, 100.0, 0.0, 1.0, 0.25, 0.25, false).unwrap();
        let engine = GreensEngine::new(&dimer, 2).unwrap();
        let sigma = 0.1;
        let a = Wavepacket::new("L", 99.0, sigma).unwrap();
        let b = Wavepacket::new("L", 99.2, sigma).unwrap();
        let grid = uniform_grid(99.0, 99.2, 17);
        let out = wavepacket_output(&engine, &[a.clone(), b.clone()], &["R".into(), "R".into()], &grid).unwrap();
        let WavepacketOutput::Two { values, .. } = out else { panic!("expected two photons") };
        let t = |k| one_photon_s(&engine, "R", "L", k).unwrap();
        let peak = values.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max);
        for (i, &p1) in grid.iter().enumerate() {
            for (j, &p2) in grid.iter().enumerate() {
                let elastic = t(p1) * t(p2) * (a.amplitude(p1) * b.amplitude(p2) + b.amplitude(p1) * a.amplitude(p2));
                assert!((values[i][j] - elastic).norm() < 1e-8 * peak);
            }
        }
    }
}
