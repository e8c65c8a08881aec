use alloc::string::String;
use core::fmt;

/// Errors produced by the scattering engine.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// A system description violates one of its structural invariants.
    InvalidSpec(String),
    /// A channel label does not name any port of the system.
    UnknownChannel(String),
    /// Caller-supplied arguments are inconsistent (lengths, ranges, ...).
    InvalidArgument(String),
    /// The effective Hamiltonian block is not (numerically) diagonalizable.
    DefectiveHamiltonian { n: usize, condition: f64, detail: String },
    /// The Schur iteration did not converge.
    EigenSolverFailed { n: usize },
    /// The biorthogonal decomposition does not reconstruct its block.
    InaccurateSpectrum { n: usize, residual: f64 },
    /// A non-vacuum propagator denominator vanished on a populated eigenstate.
    NonFinite { level: usize, denominator: f64 },
    /// The vacuum-pole limit did not settle when the regulator was halved.
    InstabilityDetected { relative_change: f64 },
    /// Input and output momenta do not conserve total energy.
    OffShell { mismatch: f64 },
    /// An output grid does not resolve the input wavepackets.
    GridTooCoarse { spacing: f64, required: f64 },
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DefectiveHamiltonian { .. }
                | Error::EigenSolverFailed { .. }
                | Error::InaccurateSpectrum { .. }
                | Error::NonFinite { .. }
                | Error::InstabilityDetected { .. }
        )
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidSpec(msg) => write!(f, "invalid system: {msg}"),
            Error::UnknownChannel(label) => write!(f, "unknown channel `{label}`"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::DefectiveHamiltonian { n, condition, detail } => write!(
                f,
                "effective Hamiltonian in manifold n={n} is defective \
                 (eigenvector condition number {condition:.3e}): {detail}"
            ),
            Error::EigenSolverFailed { n } => {
                write!(f, "eigensolver did not converge in manifold n={n}")
            }
            Error::InaccurateSpectrum { n, residual } => {
                write!(f, "spectral reconstruction residual {residual:.3e} too large in manifold n={n}")
            }
            Error::NonFinite { level, denominator } => write!(
                f,
                "propagator denominator {denominator:.3e} at excitation level {level} \
                 hits a real eigenvalue"
            ),
            Error::InstabilityDetected { relative_change } => write!(
                f,
                "vacuum-pole limit unstable: halving the regulator changed the \
                 amplitude by a relative {relative_change:.3e}"
            ),
            Error::OffShell { mismatch } => {
                write!(f, "momenta are off shell: sum(k) - sum(p) = {mismatch:.3e}")
            }
            Error::GridTooCoarse { spacing, required } => {
                write!(f, "output grid spacing {spacing:.3e} exceeds the required {required:.3e}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
