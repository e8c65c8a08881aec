//! Biorthogonal eigendecomposition of non-Hermitian effective Hamiltonians.
//!
//! Right eigenvectors come from a complex Schur factorization followed by
//! triangular back-substitution; the left eigenvectors are the rows of the
//! inverse of the right eigenvector matrix, so `left * right = 1` holds to
//! rounding and no separate pairing step is needed.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, Schur};

use crate::error::{Error, Result};
use crate::fockspace::OperatorBlock;
use crate::C64;

/// Eigenvector matrices whose 2-norm condition number exceeds this are
/// treated as defective.
pub const DEFECTIVE_CONDITION: f64 = 1e8;

/// Above this condition number a failed reconstruction is blamed on
/// near-defectiveness rather than on the solver.
const ILL_CONDITIONED: f64 = 1e4;

/// Maximum accepted relative reconstruction residual.
pub const RECONSTRUCTION_TOLERANCE: f64 = 1e-10;

/// Spectral resolution `H = Σ |ε⟩ ε ⟨ε̄|` of one manifold block.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub n: usize,
    /// Sorted by ascending real part, ties by ascending imaginary part.
    pub eigenvalues: Vec<C64>,
    /// Columns are the right eigenvectors `|ε⟩`, each of unit norm.
    pub right: DMatrix<C64>,
    /// Rows are the left eigenvectors `⟨ε̄|`, with `⟨ε̄_i|ε_j⟩ = δ_ij`.
    pub left: DMatrix<C64>,
    /// 2-norm condition number of `right`.
    pub condition: f64,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `‖R diag(ε) L − H‖_F / ‖H‖_F`.
    pub fn reconstruction_residual(&self, block: &DMatrix<C64>) -> f64 {
        let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.eigenvalues));
        let rebuilt = &self.right * diag * &self.left;
        let scale = block.norm().max(f64::MIN_POSITIVE);
        (rebuilt - block).norm() / scale
    }
}

/// Decompose a square effective-Hamiltonian block.
pub fn decompose(block: &OperatorBlock) -> Result<Spectrum> {
    let h = &block.entries;
    let n = block.rows;
    if !h.is_square() || block.rows != block.cols {
        return Err(Error::InvalidArgument(format!(
            "spectral decomposition needs a square block, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    let dim = h.nrows();
    if dim == 0 {
        return Ok(Spectrum {
            n,
            eigenvalues: Vec::new(),
            right: DMatrix::zeros(0, 0),
            left: DMatrix::zeros(0, 0),
            condition: 1.0,
        });
    }
    if dim == 1 {
        let one = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        return Ok(Spectrum { n, eigenvalues: alloc::vec![h[(0, 0)]], right: one.clone(), left: one, condition: 1.0 });
    }

    let schur = Schur::try_new(h.clone(), f64::EPSILON, 1000 * dim).ok_or(Error::EigenSolverFailed { n })?;
    let (q, t) = schur.unpack();
    let scale = h.norm().max(f64::MIN_POSITIVE);
    let y = triangular_eigenvectors(&t, scale);
    let mut right = q * y;
    for mut col in right.column_iter_mut() {
        let norm = col.norm();
        col /= C64::new(norm, 0.0);
    }

    let eigenvalues: Vec<C64> = (0..dim).map(|i| t[(i, i)]).collect();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (eigenvalues[a], eigenvalues[b]);
        x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im))
    });
    let eigenvalues: Vec<C64> = order.iter().map(|&i| eigenvalues[i]).collect();
    let right = right.select_columns(order.iter());

    let sv = right.singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= DEFECTIVE_CONDITION) {
        return Err(Error::DefectiveHamiltonian {
            n,
            condition,
            detail: format!("eigenvalues {}", describe_closest_pair(&eigenvalues)),
        });
    }
    let left = right.clone().try_inverse().ok_or_else(|| Error::DefectiveHamiltonian {
        n,
        condition: f64::INFINITY,
        detail: "right eigenvector matrix is singular".into(),
    })?;

    let spectrum = Spectrum { n, eigenvalues, right, left, condition };
    let residual = spectrum.reconstruction_residual(h);
    if !(residual <= RECONSTRUCTION_TOLERANCE) {
        if condition > ILL_CONDITIONED {
            return Err(Error::DefectiveHamiltonian {
                n,
                condition,
                detail: format!(
                    "reconstruction residual {residual:.3e}; eigenvalues {}",
                    describe_closest_pair(&spectrum.eigenvalues)
                ),
            });
        }
        return Err(Error::InaccurateSpectrum { n, residual });
    }
    Ok(spectrum)
}

/// Right eigenvectors of an upper-triangular matrix, one per column.
fn triangular_eigenvectors(t: &DMatrix<C64>, scale: f64) -> DMatrix<C64> {
    let dim = t.nrows();
    let tiny = f64::EPSILON * scale;
    let mut y = DMatrix::<C64>::zeros(dim, dim);
    for k in 0..dim {
        let lambda = t[(k, k)];
        y[(k, k)] = C64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut acc = C64::new(0.0, 0.0);
            for j in (i + 1)..=k {
                acc += t[(i, j)] * y[(j, k)];
            }
            let mut denom = t[(i, i)] - lambda;
            if denom.norm() < tiny {
                if acc.norm() < 1e3 * tiny {
                    // exactly degenerate and decoupled: independent eigenvectors
                    continue;
                }
                denom = C64::new(tiny, 0.0);
            }
            y[(i, k)] = -acc / denom;
        }
    }
    y
}

fn describe_closest_pair(eigenvalues: &[C64]) -> alloc::string::String {
    let mut best: Option<(f64, usize, usize)> = None;
    for i in 0..eigenvalues.len() {
        for j in (i + 1)..eigenvalues.len() {
            let gap = (eigenvalues[i] - eigenvalues[j]).norm();
            if best.map_or(true, |(g, _, _)| gap < g) {
                best = Some((gap, i, j));
            }
        }
    }
    match best {
        Some((gap, i, j)) => format!(
            "{:.6}{:+.6}i and {:.6}{:+.6}i nearly coalesce (gap {gap:.3e})",
            eigenvalues[i].re, eigenvalues[i].im, eigenvalues[j].re, eigenvalues[j].im
        ),
        None => "single eigenvalue".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{effective_hamiltonian_block, ModeSpec, Port, PortTerm, SystemSpec};
    use alloc::vec;

    fn block(entries: DMatrix<C64>) -> OperatorBlock {
        let n = 1;
        OperatorBlock { rows: n, cols: n, entries }
    }

    fn collocated(wc: f64, wd: f64, gc: f64, gd: f64) -> SystemSpec {
        let (g1, g2) = (gc + gd, gc - gd);
        SystemSpec::new(
            vec![ModeSpec::two_level(wc + wd), ModeSpec::two_level(wc - wd)],
            vec![],
            vec![Port::new("W", vec![PortTerm::from_rate(0, g1), PortTerm::from_rate(1, g2)])],
        )
        .unwrap()
    }

    #[test]
    fn vacuum_is_exact_zero() {
        let spec = collocated(1.0, 0.2, 0.3, 0.0);
        let s = decompose(&effective_hamiltonian_block(&spec, 0)).unwrap();
        assert_eq!(s.eigenvalues, vec![C64::new(0.0, 0.0)]);
    }

    #[test]
    fn collocated_resonant_pair() {
        let (wc, gc) = (12.0, 0.25);
        let spec = collocated(wc, 0.0, gc, 0.0);
        let s = decompose(&effective_hamiltonian_block(&spec, 1)).unwrap();
        assert!((s.eigenvalues[0] - C64::new(wc, -gc)).norm() < 1e-12);
        assert!((s.eigenvalues[1] - C64::new(wc, 0.0)).norm() < 1e-12);
        let s2 = decompose(&effective_hamiltonian_block(&spec, 2)).unwrap();
        assert!((s2.eigenvalues[0] - C64::new(2.0 * wc, -gc)).norm() < 1e-12);
    }

    #[test]
    fn exceptional_point_is_defective() {
        let gc = 0.25;
        let spec = collocated(12.0, gc / 2.0, gc, 0.0);
        let err = decompose(&effective_hamiltonian_block(&spec, 1)).unwrap_err();
        assert!(matches!(err, Error::DefectiveHamiltonian { n: 1, .. }), "{err:?}");
    }

    #[test]
    fn jordan_block_is_defective() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[C64::new(1.0, -0.5), C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, -0.5)],
        );
        assert!(matches!(decompose(&block(m)), Err(Error::DefectiveHamiltonian { .. })));
    }

    #[test]
    fn hermitian_degenerate_block() {
        // two decoupled degenerate levels plus one coupled
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[
                C64::new(1.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.5, 0.0),
                C64::new(0.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.5, 0.0),
                C64::new(0.0, 0.0),
                C64::new(1.0, 0.0),
            ],
        );
        let s = decompose(&block(m)).unwrap();
        let adj = s.right.adjoint();
        assert!((adj - &s.left).norm() < 1e-10);
        for e in &s.eigenvalues {
            assert!(e.im.abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_rectangular() {
        let b = OperatorBlock { rows: 1, cols: 0, entries: DMatrix::zeros(2, 1) };
        assert!(matches!(decompose(&b), Err(Error::InvalidArgument(_))));
    }
}
