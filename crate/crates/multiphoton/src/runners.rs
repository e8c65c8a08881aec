//! Thin wrappers that turn engine results into CSV and JSON.

use std::fmt::Write as _;
use std::path::Path;

use multiphoton_core::diagrams::{diagram_label, enumerate_diagrams, level_profile};
use multiphoton_core::fockspace::{effective_hamiltonian_block, SystemSpec};
use multiphoton_core::greens::GreensEngine;
use multiphoton_core::peaks::{find_peaks, full_width_half_max, Axis, Grid2};
use multiphoton_core::smatrix::{
    check_grid, one_photon_s, two_photon_amplitude, two_photon_grid_norm, wavepacket_output, Wavepacket,
    WavepacketOutput,
};
use multiphoton_core::spectral::decompose;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::gmap::{GridFile, Range};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub n: usize,
    pub index: usize,
    pub re: f64,
    pub im: f64,
}

/// Eigenvalues of the effective Hamiltonian in manifold `n`, ascending in
/// real part.
pub fn run_spectrum(spec: &SystemSpec, n: usize) -> Result<Vec<Level>> {
    let spectrum = decompose(&effective_hamiltonian_block(spec, n))?;
    Ok(spectrum.eigenvalues.iter().enumerate().map(|(index, e)| Level { n, index, re: e.re, im: e.im }).collect())
}

pub fn spectrum_csv(levels: &[Level]) -> String {
    let mut out = String::from("n,index,re,im\n");
    for l in levels {
        writeln!(out, "{},{},{:.11e},{:.11e}", l.n, l.index, l.re, l.im).unwrap();
    }
    out
}

pub fn spectrum_json(levels: &[Level]) -> String {
    serde_json::to_string_pretty(levels).expect("levels serialize") + "\n"
}

/// `S_{out;in}(k)` for every ordered port pair on `range`, one row per
/// (k, out, in).
pub fn run_one_photon(spec: &SystemSpec, range: &Range) -> Result<String> {
    let engine = GreensEngine::new(spec, 1)?;
    let labels: Vec<&str> = spec.ports().iter().map(|p| p.label.as_str()).collect();
    let mut out = String::from("k,out,in,re,im,abs2\n");
    for k in range.points() {
        for &o in &labels {
            for &i in &labels {
                let s = one_photon_s(&engine, o, i, k)?;
                writeln!(out, "{k:.11e},{o},{i},{:.11e},{:.11e},{:.11e}", s.re, s.im, s.norm_sqr()).unwrap();
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakEntry {
    pub dk: f64,
    pub dp: f64,
    pub height: f64,
    /// Full width at half maximum along Δk and Δp, when both sides drop
    /// below half inside the grid.
    pub fwhm_dk: Option<f64>,
    pub fwhm_dp: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakReport {
    pub threshold: f64,
    pub grid_max: f64,
    pub dk: [f64; 2],
    pub dp: [f64; 2],
    pub shape: [usize; 2],
    #[serde(default)]
    pub metadata: std::collections::BTreeMap<String, String>,
    pub peaks: Vec<PeakEntry>,
}

pub fn peak_report(grid: &Grid2, threshold: f64) -> PeakReport {
    let peaks = find_peaks(grid, threshold)
        .iter()
        .map(|p| PeakEntry {
            dk: p.x,
            dp: p.y,
            height: p.height,
            fwhm_dk: full_width_half_max(grid, p, Axis::X),
            fwhm_dp: full_width_half_max(grid, p, Axis::Y),
        })
        .collect();
    let (xs, ys) = (grid.xs(), grid.ys());
    PeakReport {
        threshold,
        grid_max: grid.max(),
        dk: [xs[0], xs[xs.len() - 1]],
        dp: [ys[0], ys[ys.len() - 1]],
        shape: [xs.len(), ys.len()],
        metadata: Default::default(),
        peaks,
    }
}

pub fn peak_report_for_file(file: &GridFile, threshold: f64) -> PeakReport {
    let mut report = peak_report(&file.grid, threshold);
    report.metadata = file.metadata.clone();
    report
}

/// Input of `scatter-wavepacket`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterSpec {
    pub photons: Vec<PhotonSpec>,
    /// One entry per reported channel for one photon; the channel of each
    /// outgoing photon for two.
    pub out_channels: Vec<String>,
    pub grid: GridSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhotonSpec {
    pub channel: String,
    pub center: f64,
    pub width: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelAmplitude {
    pub channel: String,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "photons", rename_all = "snake_case")]
pub enum ScatterResult {
    One {
        momenta: Vec<f64>,
        amplitudes: Vec<ChannelAmplitude>,
        /// Outgoing probability over all ports.
        norm: f64,
    },
    Two {
        channels: [String; 2],
        momenta: Vec<f64>,
        /// `re[i][j]`, `im[i][j]` at `(p₁, p₂) = (momenta[i], momenta[j])`.
        re: Vec<Vec<f64>>,
        im: Vec<Vec<f64>>,
        /// Probability carried by this channel pair on the grid.
        grid_norm: f64,
    },
}

impl ScatterSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
        serde_json::from_str(&text).map_err(|e| CliError::Parse {
            path: path.into(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }
}

pub fn run_scatter(spec: &SystemSpec, input: &ScatterSpec) -> Result<ScatterResult> {
    let range = Range::new(input.grid.lo, input.grid.hi, input.grid.steps)
        .map_err(|m| multiphoton_core::Error::InvalidArgument(m))?;
    let packets = input
        .photons
        .iter()
        .map(|p| Wavepacket::new(p.channel.clone(), p.center, p.width))
        .collect::<multiphoton_core::Result<Vec<_>>>()?;
    let engine = GreensEngine::new(spec, packets.len().max(1))?;
    if let ([a, b], [o1, o2]) = (packets.as_slice(), input.out_channels.as_slice()) {
        return scatter_pair(&engine, [a, b], [o1, o2], &range.points());
    }
    let split = |values: &[multiphoton_core::C64]| -> (Vec<f64>, Vec<f64>) {
        (values.iter().map(|v| v.re).collect(), values.iter().map(|v| v.im).collect())
    };
    Ok(match wavepacket_output(&engine, &packets, &input.out_channels, &range.points())? {
        WavepacketOutput::One { channels, momenta, values, norm } => ScatterResult::One {
            momenta,
            amplitudes: channels
                .into_iter()
                .zip(&values)
                .map(|(channel, v)| {
                    let (re, im) = split(v);
                    ChannelAmplitude { channel, re, im }
                })
                .collect(),
            norm,
        },
        WavepacketOutput::Two { channels, momenta, values, grid_norm } => {
            let (re, im) = values.iter().map(|row| split(row)).unzip();
            ScatterResult::Two { channels, momenta, re, im, grid_norm }
        }
    })
}

/// Two-photon branch of [`run_scatter`], parallel over output rows.
fn scatter_pair(
    engine: &GreensEngine,
    inputs: [&Wavepacket; 2],
    outs: [&String; 2],
    grid: &[f64],
) -> Result<ScatterResult> {
    let width = inputs[0].width.min(inputs[1].width);
    let spacing = check_grid(grid, width)?;
    let rows = grid
        .par_iter()
        .map(|&p1| {
            grid.iter()
                .map(|&p2| two_photon_amplitude(engine, inputs, [outs[0], outs[1]], p1, p2))
                .collect::<multiphoton_core::Result<Vec<_>>>()
        })
        .collect::<multiphoton_core::Result<Vec<_>>>()?;
    let grid_norm = two_photon_grid_norm(&rows, spacing, outs[0] == outs[1]);
    let re = rows.iter().map(|r| r.iter().map(|v| v.re).collect()).collect();
    let im = rows.iter().map(|r| r.iter().map(|v| v.im).collect()).collect();
    Ok(ScatterResult::Two { channels: [outs[0].clone(), outs[1].clone()], momenta: grid.to_vec(), re, im, grid_norm })
}

/// One block per diagram: the operator label, then its level profile.
pub fn run_diagrams(m: usize, cap: usize) -> String {
    let mut out = String::new();
    for (idx, d) in enumerate_diagrams(m, cap).iter().enumerate() {
        writeln!(out, "{idx:>3}  {}", diagram_label(d)).unwrap();
        for line in level_profile(d).lines() {
            writeln!(out, "     {line}").unwrap();
        }
    }
    out
}
