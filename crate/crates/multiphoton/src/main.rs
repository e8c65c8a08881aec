use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use multiphoton::gmap::JobOverrides;
use multiphoton::runners::{self, ScatterSpec};
use multiphoton::{read_grid_csv, run_gmap, CliError, Config, GridJob, Range, Result};

const DEFAULT_THRESHOLD: f64 = 0.1;

#[derive(Parser)]
#[command(name = "multiphoton", version, about = "Few-photon S-matrices of waveguide-coupled emitters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues of the effective Hamiltonian in one excitation manifold.
    Spectrum {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// One-photon S-matrix elements for every port pair.
    OnePhoton {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        kmin: f64,
        #[arg(long)]
        kmax: f64,
        #[arg(long, default_value_t = 201)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// |G|² on a (Δk, Δp) grid. Unset flags fall back to the config's [gmap] table.
    Gmap {
        #[arg(long)]
        config: PathBuf,
        /// OUT:IN, e.g. RR:LL or out1,out2:in1,in2
        #[arg(long)]
        channels: Option<String>,
        /// Number, `highest-doubly-excited` or `dimer-probe`
        #[arg(long, allow_hyphen_values = true)]
        etotal: Option<String>,
        /// lo:hi:steps
        #[arg(long, allow_hyphen_values = true)]
        dk: Option<String>,
        /// lo:hi:steps
        #[arg(long, allow_hyphen_values = true)]
        dp: Option<String>,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Strict local maxima of a gmap CSV, as JSON.
    Peaks {
        #[arg(long = "in")]
        input: PathBuf,
        /// Fraction of the grid maximum; defaults to the file's header, else 0.1
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the diagrams of the 2m-point function.
    Diagrams {
        #[arg(long)]
        m: usize,
        /// Excitation cap, defaults to m
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Scatter Gaussian one- or two-photon wavepackets.
    ScatterWavepacket {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        in_spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Io { path: path.into(), source }),
        None => {
            io::stdout().write_all(text.as_bytes()).map_err(|source| CliError::Io { path: "<stdout>".into(), source })
        }
    }
}

fn load(path: &Path) -> Result<(Config, multiphoton_core::fockspace::SystemSpec)> {
    let config = Config::load(path)?;
    let spec = config.build(path)?;
    Ok((config, spec))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Spectrum { config, n, format } => {
            let (_, spec) = load(&config)?;
            let levels = runners::run_spectrum(&spec, n)?;
            let text = match format {
                Format::Csv => runners::spectrum_csv(&levels),
                Format::Json => runners::spectrum_json(&levels),
            };
            emit(None, &text)
        }
        Command::OnePhoton { config, kmin, kmax, steps, out } => {
            let (_, spec) = load(&config)?;
            let range = Range::new(kmin, kmax, steps).map_err(|m| CliError::config(&config, m))?;
            emit(out.as_deref(), &runners::run_one_photon(&spec, &range)?)
        }
        Command::Gmap { config, channels, etotal, dk, dp, eta, out } => {
            let cfg = Config::load(&config)?;
            let flags = JobOverrides { channels, etotal, dk, dp, eta };
            let job = GridJob::from_config(&cfg, &config, &flags)?;
            let map = run_gmap(&job)?;
            emit(out.as_deref(), &map.to_csv_string())
        }
        Command::Peaks { input, threshold, out } => {
            let file = read_grid_csv(&input)?;
            let threshold = threshold.or_else(|| file.threshold()).unwrap_or(DEFAULT_THRESHOLD);
            let report = runners::peak_report_for_file(&file, threshold);
            let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
            emit(out.as_deref(), &text)
        }
        Command::Diagrams { m, cap } => {
            if m == 0 || cap == Some(0) {
                return Err(CliError::config("<args>", "m and cap must be at least 1"));
            }
            emit(None, &runners::run_diagrams(m, cap.unwrap_or(m)))
        }
        Command::ScatterWavepacket { config, in_spec, out } => {
            let (_, spec) = load(&config)?;
            let input = ScatterSpec::load(&in_spec)?;
            let result = runners::run_scatter(&spec, &input)?;
            let text = serde_json::to_string(&result).expect("result serializes") + "\n";
            emit(out.as_deref(), &text)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
