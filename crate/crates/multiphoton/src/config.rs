//! System configuration files (TOML, or JSON by extension).
//!
//! ```toml
//! units = "J"
//!
//! [system]
//! model = "bose_hubbard"
//! sites = 2
//! omega0 = 100.0
//! kerr = 4.0
//! hopping = 1.0
//! gamma_first = 0.25
//! gamma_last = 0.25
//!
//! [gmap]
//! channels = "RR:LL"
//! etotal = "dimer-probe"
//! dk = "-6:6:201"
//! dp = "-6:6:201"
//! ```
//!
//! `model = "explicit"` takes `modes`, `hops` and `ports` tables instead,
//! with port couplings given as decay rates `gamma`.

use std::fs;
use std::path::Path;

use multiphoton_core::fockspace::{Hop, ModeKind, ModeSpec, Port, PortTerm, SystemSpec};
use multiphoton_core::models::{build_bose_hubbard, build_collocated, build_two_level, CollocatedParams};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Energy unit of every number in the file. Only recorded, never converted.
    #[serde(default = "default_units")]
    pub units: String,
    pub system: SystemConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gmap: Option<GmapDefaults>,
}

fn default_units() -> String {
    "arb".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemConfig {
    Explicit {
        modes: Vec<ModeConfig>,
        #[serde(default)]
        hops: Vec<HopConfig>,
        ports: Vec<PortConfig>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        boson_cap: Option<u32>,
    },
    TwoLevel {
        omega: f64,
        gamma_left: f64,
        gamma_right: f64,
    },
    Collocated {
        omega_c: f64,
        omega_d: f64,
        gamma_c: f64,
        #[serde(default)]
        gamma_d: f64,
    },
    BoseHubbard {
        sites: usize,
        omega0: f64,
        kerr: f64,
        hopping: f64,
        gamma_first: f64,
        gamma_last: f64,
        #[serde(default)]
        ring: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKindConfig {
    TwoLevel,
    Boson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    pub kind: ModeKindConfig,
    pub frequency: f64,
    #[serde(default)]
    pub kerr: f64,
    #[serde(default)]
    pub loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HopConfig {
    pub i: usize,
    pub j: usize,
    pub strength: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortConfig {
    pub label: String,
    pub terms: Vec<PortTermConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortTermConfig {
    pub mode: usize,
    pub gamma: f64,
}

/// Defaults for the `gmap` and `peaks` subcommands; flags override them.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GmapDefaults {
    pub channels: Option<String>,
    pub etotal: Option<EnergyValue>,
    pub dk: Option<String>,
    pub dp: Option<String>,
    pub eta: Option<f64>,
    pub threshold: Option<f64>,
}

/// A number or one of the keywords understood by [`crate::gmap::EnergySpec`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EnergyValue {
    Number(f64),
    Keyword(String),
}

impl SystemConfig {
    pub fn build(&self) -> multiphoton_core::Result<SystemSpec> {
        match self {
            SystemConfig::Explicit { modes, hops, ports, boson_cap } => {
                let modes = modes
                    .iter()
                    .map(|m| {
                        let base = match m.kind {
                            ModeKindConfig::TwoLevel => ModeSpec::two_level(m.frequency),
                            ModeKindConfig::Boson => ModeSpec::boson(m.frequency, m.kerr),
                        };
                        base.with_loss(m.loss)
                    })
                    .collect();
                let hops = hops.iter().map(|h| Hop { i: h.i, j: h.j, strength: h.strength }).collect();
                let mut port_list = Vec::with_capacity(ports.len());
                for port in ports {
                    let mut terms = Vec::with_capacity(port.terms.len());
                    for t in &port.terms {
                        if !(t.gamma >= 0.0) || !t.gamma.is_finite() {
                            return Err(multiphoton_core::Error::InvalidSpec(format!(
                                "port `{}`: gamma must be finite and nonnegative, got {}",
                                port.label, t.gamma
                            )));
                        }
                        terms.push(PortTerm::from_rate(t.mode, t.gamma));
                    }
                    port_list.push(Port::new(port.label.clone(), terms));
                }
                let spec = SystemSpec::new(modes, hops, port_list)?;
                match boson_cap {
                    Some(cap) => spec.with_boson_cap(*cap),
                    None => Ok(spec),
                }
            }
            SystemConfig::TwoLevel { omega, gamma_left, gamma_right } => {
                build_two_level(*omega, *gamma_left, *gamma_right)
            }
            SystemConfig::Collocated { omega_c, omega_d, gamma_c, gamma_d } => {
                build_collocated(&CollocatedParams::new(*omega_c, *omega_d, *gamma_c, *gamma_d)?)
            }
            SystemConfig::BoseHubbard { sites, omega0, kerr, hopping, gamma_first, gamma_last, ring } => {
                build_bose_hubbard(*sites, *omega0, *kerr, *hopping, *gamma_first, *gamma_last, *ring)
            }
        }
    }

    /// Compact JSON, as embedded in output metadata.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("system config serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

/// Explicit description of a built system, e.g. to turn a named model
/// into an editable `explicit` config.
pub fn explicit_config(spec: &SystemSpec) -> SystemConfig {
    SystemConfig::Explicit {
        modes: spec
            .modes()
            .iter()
            .map(|m| ModeConfig {
                kind: match m.kind {
                    ModeKind::TwoLevel => ModeKindConfig::TwoLevel,
                    ModeKind::Boson => ModeKindConfig::Boson,
                },
                frequency: m.frequency,
                kerr: m.kerr,
                loss: m.loss,
            })
            .collect(),
        hops: spec.hops().iter().map(|h| HopConfig { i: h.i, j: h.j, strength: h.strength }).collect(),
        ports: spec
            .ports()
            .iter()
            .map(|p| PortConfig {
                label: p.label.clone(),
                terms: p.terms.iter().map(|t| PortTermConfig { mode: t.mode, gamma: t.rate() }).collect(),
            })
            .collect(),
        boson_cap: spec.boson_cap(),
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
        Self::parse(path, &text)
    }

    /// Parses `text` as JSON when `path` ends in `.json`, TOML otherwise.
    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        if json {
            serde_json::from_str(text).map_err(|e| CliError::Parse {
                path: path.into(),
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })
        } else {
            toml::from_str(text).map_err(|e| {
                let (line, column) = e.span().map_or((0, 0), |s| line_column(text, s.start));
                CliError::Parse { path: path.into(), line, column, message: e.message().trim().to_string() }
            })
        }
    }

    /// Builds the system, reporting failures against the config file.
    pub fn build(&self, path: &Path) -> Result<SystemSpec> {
        self.system.build().map_err(|e| match e {
            multiphoton_core::Error::InvalidSpec(msg) => CliError::config(path, format!("[system] {msg}")),
            other => CliError::Engine(other),
        })
    }
}

/// 1-based line and column of a byte offset.
pub fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(offset, |i| offset - i - 1) + 1;
    (line, column)
}

#[cfg(test)]
mod tests {
    use super::*;

    const DIMER: &str = r#"
units = "J"

[system]
model = "bose_hubbard"
sites = 2
omega0 = 100.0
kerr = 4.0
hopping = 1.0
gamma_first = 0.25
gamma_last = 0.25
"#;

    #[test]
    fn named_model() {
        let cfg = Config::parse(Path::new("d.toml"), DIMER).unwrap();
        assert_eq!(cfg.units, "J");
        let spec = cfg.build(Path::new("d.toml")).unwrap();
        assert_eq!(spec.modes().len(), 2);
        assert_eq!(spec.ports()[1].label, "R");
    }

    #[test]
    fn explicit_round_trip_through_json() {
        let text = r#"
[system]
model = "explicit"
boson_cap = 3

[[system.modes]]
kind = "two_level"
frequency = 1.0

[[system.modes]]
kind = "boson"
frequency = 1.5
kerr = 0.3
loss = 0.01

[[system.hops]]
i = 0
j = 1
strength = 0.2

[[system.ports]]
label = "W"
terms = [{ mode = 0, gamma = 0.1 }, { mode = 1, gamma = 0.4 }]
"#;
        let cfg = Config::parse(Path::new("x.toml"), text).unwrap();
        assert_eq!(cfg.units, "arb");
        let json = cfg.system.to_json();
        assert_eq!(SystemConfig::from_json(&json).unwrap(), cfg.system);
        let spec = cfg.system.build().unwrap();
        assert_eq!(spec.boson_cap(), Some(3));
        assert!((spec.ports()[0].terms[1].rate() - 0.4).abs() < 1e-15);
        assert_eq!(explicit_config(&spec).build().unwrap(), spec);
    }

    #[test]
    fn syntax_errors_carry_lines() {
        let bad = DIMER.replace("kerr = 4.0", "kerr = four");
        match Config::parse(Path::new("d.toml"), &bad) {
            Err(CliError::Parse { line, .. }) => assert_eq!(line, 8),
            other => panic!("expected parse error, got {other:?}"),
        }
        let unknown = DIMER.replace("kerr = 4.0", "kerr = 4.0\nkerrr = 1.0");
        assert!(matches!(Config::parse(Path::new("d.toml"), &unknown), Err(CliError::Parse { .. })));
        match Config::parse(Path::new("d.json"), "{\"system\":\n {\"model\": 3}}") {
            Err(CliError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn invalid_systems_are_config_errors() {
        let text = DIMER.replace("sites = 2", "sites = 0");
        let cfg = Config::parse(Path::new("d.toml"), &text).unwrap();
        let err = cfg.build(Path::new("d.toml")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("d.toml"));
    }

    #[test]
    fn critical_collocated_pair_is_numerical() {
        let text = "[system]\nmodel = \"collocated\"\nomega_c = 1.0\nomega_d = 0.125\ngamma_c = 0.25\n";
        let cfg = Config::parse(Path::new("c.toml"), text).unwrap();
        assert_eq!(cfg.build(Path::new("c.toml")).unwrap_err().exit_code(), 3);
    }

    #[test]
    fn line_columns() {
        assert_eq!(line_column("ab\ncd", 0), (1, 1));
        assert_eq!(line_column("ab\ncd", 4), (2, 2));
    }
}
