//! Two-photon correlation maps `|G(p₁,p₂;k₁,k₂)|²` on `(Δk, Δp)` grids.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use multiphoton_core::fockspace::SystemSpec;
use multiphoton_core::greens::GreensEngine;
use multiphoton_core::models::{dimer_probe_energy, highest_level};
use multiphoton_core::peaks::Grid2;
use multiphoton_core::smatrix::two_photon_density;
use rayon::prelude::*;

use crate::config::{Config, EnergyValue, SystemConfig};
use crate::error::{CliError, Result};

pub const FORMAT_TAG: &str = "multiphoton-gmap";
pub const DEFAULT_STEPS: usize = 201;

/// `lo:hi:steps`, endpoints included.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl Range {
    pub fn new(lo: f64, hi: f64, steps: usize) -> std::result::Result<Self, String> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(format!("range bounds must be finite, got {lo}:{hi}"));
        }
        if steps < 2 {
            return Err(format!("a range needs at least 2 steps, got {steps}"));
        }
        if !(lo < hi) {
            return Err(format!("range must increase, got {lo}:{hi}"));
        }
        Ok(Range { lo, hi, steps })
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.steps - 1) as f64
    }

    pub fn points(&self) -> Vec<f64> {
        let last = (self.steps - 1) as f64;
        (0..self.steps).map(|i| self.lo + (self.hi - self.lo) * (i as f64 / last)).collect()
    }
}

impl FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let bad = || format!("expected lo:hi:steps, got `{s}`");
        match parts.as_slice() {
            [lo, hi, steps] => Range::new(
                lo.parse().map_err(|_| bad())?,
                hi.parse().map_err(|_| bad())?,
                steps.parse().map_err(|_| bad())?,
            ),
            [lo, hi] => Range::new(lo.parse().map_err(|_| bad())?, hi.parse().map_err(|_| bad())?, DEFAULT_STEPS),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Range {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.steps)
    }
}

/// Output and input channel pairs. `RR:LL` when every label is one
/// character, `out1,out2:in1,in2` otherwise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Channels {
    pub outputs: [String; 2],
    pub inputs: [String; 2],
}

impl FromStr for Channels {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (out, inp) = s.split_once(':').ok_or_else(|| format!("expected OUT:IN channels, got `{s}`"))?;
        let pair = |part: &str| -> std::result::Result<[String; 2], String> {
            let part = part.trim();
            let labels: Vec<String> = if part.contains(',') {
                part.split(',').map(|l| l.trim().to_string()).collect()
            } else {
                part.chars().map(String::from).collect()
            };
            match <[String; 2]>::try_from(labels) {
                Ok(p) if p.iter().all(|l| !l.is_empty()) => Ok(p),
                _ => Err(format!("expected two channel labels in `{part}`")),
            }
        };
        Ok(Channels { outputs: pair(out)?, inputs: pair(inp)? })
    }
}

impl fmt::Display for Channels {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let all = self.outputs.iter().chain(&self.inputs);
        if all.clone().all(|l| l.chars().count() == 1) {
            write!(f, "{}{}:{}{}", self.outputs[0], self.outputs[1], self.inputs[0], self.inputs[1])
        } else {
            write!(f, "{},{}:{},{}", self.outputs[0], self.outputs[1], self.inputs[0], self.inputs[1])
        }
    }
}

/// Total two-photon energy: a number, or a level of the system.
#[derive(Clone, Debug, PartialEq)]
pub enum EnergySpec {
    Value(f64),
    /// Largest real part of the doubly excited spectrum.
    HighestDoublyExcited,
    /// `2ω₀ + U/2 − √(4J² + U²/4)`, the lowest doubly excited dimer level.
    DimerProbe,
}

impl FromStr for EnergySpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "highest-doubly-excited" => Ok(EnergySpec::HighestDoublyExcited),
            "dimer-probe" => Ok(EnergySpec::DimerProbe),
            other => other
                .parse()
                .map(EnergySpec::Value)
                .map_err(|_| format!("expected a number, `highest-doubly-excited` or `dimer-probe`, got `{other}`")),
        }
    }
}

impl EnergySpec {
    pub fn from_value(v: &EnergyValue) -> std::result::Result<Self, String> {
        match v {
            EnergyValue::Number(x) => Ok(EnergySpec::Value(*x)),
            EnergyValue::Keyword(k) => k.parse(),
        }
    }

    pub fn resolve(&self, system: &SystemConfig, engine: &GreensEngine) -> std::result::Result<f64, String> {
        match self {
            EnergySpec::Value(e) => Ok(*e),
            EnergySpec::HighestDoublyExcited => engine
                .spectra()
                .get(2)
                .and_then(highest_level)
                .ok_or_else(|| "the system has no doubly excited states".to_string()),
            EnergySpec::DimerProbe => match system {
                SystemConfig::BoseHubbard { sites: 2, omega0, kerr, hopping, .. } => {
                    Ok(dimer_probe_energy(*omega0, *kerr, *hopping))
                }
                _ => Err("`dimer-probe` needs a two-site bose_hubbard system".into()),
            },
        }
    }
}

/// Everything needed to compute (and recompute) one map.
#[derive(Clone, Debug, PartialEq)]
pub struct GridJob {
    pub units: String,
    pub system: SystemConfig,
    pub channels: Channels,
    pub energy: f64,
    pub dk: Range,
    pub dp: Range,
    /// Vacuum-pole regulator; the engine default when `None`.
    pub eta: Option<f64>,
    /// Suggested peak threshold, passed through to the CSV header.
    pub threshold: Option<f64>,
}

/// Flag values that override a config's `[gmap]` table.
#[derive(Clone, Debug, Default)]
pub struct JobOverrides {
    pub channels: Option<String>,
    pub etotal: Option<String>,
    pub dk: Option<String>,
    pub dp: Option<String>,
    pub eta: Option<f64>,
}

impl GridJob {
    /// Merge flags with the config defaults and resolve the total energy.
    pub fn from_config(config: &Config, path: &Path, flags: &JobOverrides) -> Result<Self> {
        let defaults = config.gmap.clone().unwrap_or_default();
        let missing = |what: &str| CliError::config(path, format!("no {what} given on the command line or in [gmap]"));
        let bad = |what: &str, msg: String| CliError::config(path, format!("{what}: {msg}"));

        let channels: Channels = flags
            .channels
            .clone()
            .or(defaults.channels)
            .ok_or_else(|| missing("channels"))?
            .parse()
            .map_err(|m| bad("channels", m))?;
        let energy: EnergySpec = match (&flags.etotal, &defaults.etotal) {
            (Some(flag), _) => flag.parse().map_err(|m| bad("etotal", m))?,
            (None, Some(v)) => EnergySpec::from_value(v).map_err(|m| bad("etotal", m))?,
            (None, None) => return Err(missing("etotal")),
        };
        let range = |flag: &Option<String>, default: &Option<String>, what: &str| -> Result<Range> {
            flag.clone().or_else(|| default.clone()).ok_or_else(|| missing(what))?.parse().map_err(|m| bad(what, m))
        };
        let dk = range(&flags.dk, &defaults.dk, "dk")?;
        let dp = range(&flags.dp, &defaults.dp, "dp")?;
        let eta = flags.eta.or(defaults.eta);
        if let Some(e) = eta {
            if !(e > 0.0) || !e.is_finite() {
                return Err(bad("eta", format!("must be positive, got {e}")));
            }
        }

        let spec = config.build(path)?;
        let engine = GreensEngine::new(&spec, 2)?;
        let energy = energy.resolve(&config.system, &engine).map_err(|m| bad("etotal", m))?;
        let job = GridJob {
            units: config.units.clone(),
            system: config.system.clone(),
            channels,
            energy,
            dk,
            dp,
            eta,
            threshold: defaults.threshold,
        };
        for label in job.channels.outputs.iter().chain(&job.channels.inputs) {
            spec.port_index(label).map_err(|_| bad("channels", format!("the system has no port `{label}`")))?;
        }
        Ok(job)
    }

    pub fn engine(&self) -> multiphoton_core::Result<GreensEngine> {
        let spec: SystemSpec = self.system.build()?;
        let engine = GreensEngine::new(&spec, 2)?;
        match self.eta {
            Some(eta) => engine.with_eta(eta),
            None => Ok(engine),
        }
    }
}

/// A computed map. `values[i * dp.steps + j]` is the density at
/// `(dk[i], dp[j])`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridMap {
    pub job: GridJob,
    pub eta: f64,
    pub values: Vec<f64>,
}

pub fn run_gmap(job: &GridJob) -> Result<GridMap> {
    let engine = job.engine()?;
    let dks = job.dk.points();
    let dps = job.dp.points();
    let out = [job.channels.outputs[0].as_str(), job.channels.outputs[1].as_str()];
    let inp = [job.channels.inputs[0].as_str(), job.channels.inputs[1].as_str()];
    let values = (0..dks.len() * dps.len())
        .into_par_iter()
        .map(|idx| two_photon_density(&engine, out, inp, job.energy, dks[idx / dps.len()], dps[idx % dps.len()]))
        .collect::<multiphoton_core::Result<Vec<f64>>>()?;
    Ok(GridMap { job: job.clone(), eta: engine.eta(), values })
}

impl GridMap {
    pub fn grid(&self) -> Grid2 {
        Grid2::new(self.job.dk.points(), self.job.dp.points(), self.values.clone()).expect("job ranges are valid")
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let job = &self.job;
        writeln!(w, "# {FORMAT_TAG} {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(w, "# units: {}", job.units)?;
        writeln!(w, "# system: {}", job.system.to_json())?;
        writeln!(w, "# channels: {}", job.channels)?;
        writeln!(w, "# etotal: {}", job.energy)?;
        writeln!(w, "# eta: {}", self.eta)?;
        writeln!(w, "# dk: {}", job.dk)?;
        writeln!(w, "# dp: {}", job.dp)?;
        if let Some(t) = job.threshold {
            writeln!(w, "# threshold: {t}")?;
        }
        writeln!(w, "dk,dp,g2")?;
        let dps = job.dp.points();
        for (i, dk) in job.dk.points().iter().enumerate() {
            for (j, dp) in dps.iter().enumerate() {
                writeln!(w, "{dk:.11e},{dp:.11e},{:.11e}", self.values[i * dps.len() + j])?;
            }
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV is UTF-8")
    }
}

/// A grid read back from CSV, with its `# key: value` header.
#[derive(Clone, Debug)]
pub struct GridFile {
    pub metadata: BTreeMap<String, String>,
    pub grid: Grid2,
}

impl GridFile {
    /// The job that produced the file, when the header is complete.
    pub fn job(&self) -> std::result::Result<GridJob, String> {
        let get = |k: &str| self.metadata.get(k).ok_or_else(|| format!("header has no `{k}`"));
        Ok(GridJob {
            units: get("units")?.clone(),
            system: SystemConfig::from_json(get("system")?).map_err(|e| format!("system: {e}"))?,
            channels: get("channels")?.parse()?,
            energy: get("etotal")?.parse().map_err(|_| "etotal is not a number".to_string())?,
            dk: get("dk")?.parse()?,
            dp: get("dp")?.parse()?,
            eta: Some(get("eta")?.parse().map_err(|_| "eta is not a number".to_string())?),
            threshold: self.threshold(),
        })
    }

    pub fn threshold(&self) -> Option<f64> {
        self.metadata.get("threshold").and_then(|t| t.parse().ok())
    }
}

/// Reads `dk,dp,value` rows (row-major in `dk`) with optional `#` header
/// lines and an optional column-name line.
pub fn read_grid_csv(path: &Path) -> Result<GridFile> {
    let file = std::fs::File::open(path).map_err(|source| CliError::Io { path: path.into(), source })?;
    parse_grid_csv(path, io::BufReader::new(file))
}

pub fn parse_grid_csv<R: BufRead>(path: &Path, reader: R) -> Result<GridFile> {
    let mut metadata = BTreeMap::new();
    let mut rows: Vec<[f64; 3]> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| CliError::Io { path: path.into(), source })?;
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once(':') {
                metadata.insert(k.trim().to_string(), v.trim().to_string());
            } else if let Some(tag) = rest.trim().strip_prefix(FORMAT_TAG) {
                metadata.insert("version".into(), tag.trim().to_string());
            }
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        let parsed: Option<Vec<f64>> = fields.iter().map(|f| f.parse().ok()).collect();
        match parsed {
            Some(v) if v.len() == 3 => rows.push([v[0], v[1], v[2]]),
            _ if rows.is_empty() && fields.len() == 3 => continue,
            _ => {
                return Err(CliError::Parse {
                    path: path.into(),
                    line: line_no,
                    column: 1,
                    message: format!("expected three numbers, got `{trimmed}`"),
                })
            }
        }
    }
    let malformed = |message: String| CliError::Parse { path: path.into(), line: 0, column: 0, message };
    let first = rows.first().ok_or_else(|| malformed("no data rows".into()))?[0];
    let ny = rows.iter().take_while(|r| r[0] == first).count();
    if rows.len() % ny != 0 {
        return Err(malformed(format!("{} rows do not form blocks of {ny}", rows.len())));
    }
    let nx = rows.len() / ny;
    let ys: Vec<f64> = rows[..ny].iter().map(|r| r[1]).collect();
    let mut xs = Vec::with_capacity(nx);
    for (i, block) in rows.chunks(ny).enumerate() {
        let x = block[0][0];
        if block.iter().any(|r| r[0] != x) || block.iter().zip(&ys).any(|(r, y)| r[1] != *y) {
            return Err(malformed(format!("block {i} is not a rectangular grid row")));
        }
        xs.push(x);
    }
    let values = rows.iter().map(|r| r[2]).collect();
    let grid = Grid2::new(xs, ys, values).map_err(|e| malformed(e.to_string()))?;
    Ok(GridFile { metadata, grid })
}
