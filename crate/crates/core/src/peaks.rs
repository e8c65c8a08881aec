//! Local maxima and widths on rectangular two-dimensional grids.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Values sampled on `xs × ys`, row-major: `values[i * ys.len() + j]` is
/// the sample at `(xs[i], ys[j])`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid2 {
    xs: Vec<f64>,
    ys: Vec<f64>,
    values: Vec<f64>,
}

impl Grid2 {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if xs.len() * ys.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "{} values do not fill a {}x{} grid",
                values.len(),
                xs.len(),
                ys.len()
            )));
        }
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]);
        if !increasing(&xs) || !increasing(&ys) {
            return Err(Error::InvalidArgument("grid axes must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("grid values must be finite".into()));
        }
        Ok(Grid2 { xs, ys, values })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ys.len() + j]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Peak {
    pub i: usize,
    pub j: usize,
    pub x: f64,
    pub y: f64,
    pub height: f64,
}

/// Interior points strictly larger than all eight neighbours and above
/// `threshold` times the global maximum, highest first.
pub fn find_peaks(grid: &Grid2, threshold: f64) -> Vec<Peak> {
    let (nx, ny) = (grid.xs.len(), grid.ys.len());
    let mut peaks = Vec::new();
    if nx < 3 || ny < 3 {
        return peaks;
    }
    let cut = threshold * grid.max();
    for i in 1..nx - 1 {
        for j in 1..ny - 1 {
            let h = grid.at(i, j);
            if !(h > cut) {
                continue;
            }
            let strict = (i - 1..=i + 1)
                .flat_map(|a| (j - 1..=j + 1).map(move |b| (a, b)))
                .filter(|&(a, b)| (a, b) != (i, j))
                .all(|(a, b)| grid.at(a, b) < h);
            if strict {
                peaks.push(Peak { i, j, x: grid.xs[i], y: grid.ys[j], height: h });
            }
        }
    }
    peaks.sort_by(|a, b| b.height.total_cmp(&a.height).then(a.i.cmp(&b.i)).then(a.j.cmp(&b.j)));
    peaks
}

/// Axis along which [`full_width_half_max`] walks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Width at half height through `peak` along one axis, with linear
/// interpolation of the crossings. `None` if a side never drops below half.
pub fn full_width_half_max(grid: &Grid2, peak: &Peak, axis: Axis) -> Option<f64> {
    let half = 0.5 * peak.height;
    let (coords, sample): (&[f64], &dyn Fn(usize) -> f64) = match axis {
        Axis::X => (&grid.xs, &|i| grid.at(i, peak.j)),
        Axis::Y => (&grid.ys, &|j| grid.at(peak.i, j)),
    };
    let start = match axis {
        Axis::X => peak.i,
        Axis::Y => peak.j,
    };
    let crossing = |a: usize, b: usize| {
        let (va, vb) = (sample(a), sample(b));
        coords[a] + (half - va) / (vb - va) * (coords[b] - coords[a])
    };
    let mut lo = None;
    for a in (0..start).rev() {
        if sample(a) < half {
            lo = Some(crossing(a + 1, a));
            break;
        }
    }
    let mut hi = None;
    for b in start + 1..coords.len() {
        if sample(b) < half {
            hi = Some(crossing(b - 1, b));
            break;
        }
    }
    Some(hi? - lo?)
}
