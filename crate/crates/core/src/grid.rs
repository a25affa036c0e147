//! Uniform evaluation grids and densities tabulated on them.
//!
//! All quadrature in this crate is the trapezoid rule on a uniform grid; all
//! densities, subdensities, and kernel estimates are stored as point values
//! on a [`Grid`]. Keeping a single quadrature convention means normalization,
//! L1 distances, and divergences are mutually consistent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floor used whenever a nonnegative value enters a logarithm or a
/// denominator. Grid functions are never reported below this value by the
/// evaluation routines.
pub const EPS_FLOOR: f64 = 1e-12;

/// Relative slack allowed when checking that a density integrates to one.
const DENSITY_TOL: f64 = 1e-3;

/// A uniform grid of `m` points spanning `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    /// Left endpoint.
    pub lo: f64,
    /// Right endpoint.
    pub hi: f64,
    /// Number of points (at least 8).
    pub m: usize,
}

impl Grid {
    /// Builds a grid, validating that `lo < hi` are finite and `m >= 8`.
    pub fn new(lo: f64, hi: f64, m: usize) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() || lo >= hi || m < 8 {
            return Err(Error::InvalidGrid { lo, hi, m });
        }
        Ok(Self { lo, hi, m })
    }

    /// Distance between neighboring points.
    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.m - 1) as f64
    }

    /// The `i`-th point, `lo + i * spacing`.
    pub fn point(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.spacing()
    }

    /// All grid points in order.
    pub fn points(&self) -> Vec<f64> {
        (0..self.m).map(|i| self.point(i)).collect()
    }

    /// True when the other grid has identical bounds and size.
    pub fn same_as(&self, other: &Grid) -> bool {
        self.lo == other.lo && self.hi == other.hi && self.m == other.m
    }

    fn describe(&self) -> String {
        format!("[{}, {}] m={}", self.lo, self.hi, self.m)
    }
}

/// Trapezoid weight of the `i`-th point: spacing, halved at the ends.
#[inline]
pub(crate) fn trapezoid_weight(grid: &Grid, i: usize) -> f64 {
    let d = grid.spacing();
    if i == 0 || i + 1 == grid.m {
        0.5 * d
    } else {
        d
    }
}

/// Trapezoid integral of tabulated values over their grid.
pub fn trapezoid(grid: &Grid, values: &[f64]) -> f64 {
    debug_assert_eq!(grid.m, values.len());
    let mut sum = 0.5 * (values[0] + values[grid.m - 1]);
    for v in &values[1..grid.m - 1] {
        sum += v;
    }
    sum * grid.spacing()
}

/// A nonnegative function tabulated on a grid.
///
/// Depending on the constructor this is a probability density (integral one
/// up to quadrature slack) or a subdensity (integral at most one). The
/// distinction is checked at construction; the stored data are the same.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensity {
    /// Evaluation grid.
    pub grid: Grid,
    /// Point values, one per grid point, all finite and nonnegative.
    pub values: Vec<f64>,
}

impl GridDensity {
    /// Builds a probability density; the values must integrate to one within
    /// a small quadrature tolerance.
    pub fn new_density(grid: Grid, values: Vec<f64>) -> Result<Self> {
        let d = Self::new_unnormalized(grid, values)?;
        let mass = d.integral();
        if (mass - 1.0).abs() > DENSITY_TOL {
            return Err(Error::Invalid(format!(
                "density integrates to {mass}, expected 1 +- {DENSITY_TOL}"
            )));
        }
        Ok(d)
    }

    /// Builds a subdensity; the values must integrate to at most one (plus
    /// quadrature tolerance). Log-domain smoothing produces these.
    pub fn new_subdensity(grid: Grid, values: Vec<f64>) -> Result<Self> {
        let d = Self::new_unnormalized(grid, values)?;
        let mass = d.integral();
        if mass > 1.0 + DENSITY_TOL {
            return Err(Error::Invalid(format!(
                "subdensity integrates to {mass} > 1 + {DENSITY_TOL}"
            )));
        }
        Ok(d)
    }

    /// Builds a grid function that is only checked for shape, finiteness,
    /// and nonnegativity, not for total mass.
    pub fn new_unnormalized(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.m {
            return Err(Error::Invalid(format!(
                "expected {} values on grid, got {}",
                grid.m,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Invalid(
                "density values must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { grid, values })
    }

    /// Trapezoid integral of the values.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.grid, &self.values)
    }

    /// Mean of the density, `integral of x * f(x)`, used for tie-breaking.
    pub fn mean(&self) -> f64 {
        let weighted: Vec<f64> = (0..self.grid.m)
            .map(|i| self.grid.point(i) * self.values[i])
            .collect();
        trapezoid(&self.grid, &weighted)
    }
}

/// Linear interpolation of a grid function at `x`.
///
/// Inside `[lo, hi]` the two neighboring values are blended; outside, the
/// function is treated as vanished and [`EPS_FLOOR`] is returned so callers
/// can take logarithms safely.
pub fn interpolate_at(density: &GridDensity, x: f64) -> f64 {
    let g = &density.grid;
    if !(x >= g.lo && x <= g.hi) {
        return EPS_FLOOR;
    }
    let pos = (x - g.lo) / g.spacing();
    let cell = (pos.floor() as usize).min(g.m - 2);
    let t = pos - cell as f64;
    (1.0 - t) * density.values[cell] + t * density.values[cell + 1]
}

/// L1 distance between two functions on the same grid (trapezoid rule).
///
/// Fails when the grids differ.
pub fn l1_distance(a: &GridDensity, b: &GridDensity) -> Result<f64> {
    ensure_same_grid(a, b)?;
    let g = &a.grid;
    let mut sum = 0.0;
    for i in 0..g.m {
        sum += trapezoid_weight(g, i) * (a.values[i] - b.values[i]).abs();
    }
    Ok(sum)
}

/// Generalized Kullback-Leibler divergence between nonnegative grid
/// functions: integral of `a ln(a/b) + b - a`.
///
/// `b` is floored at [`EPS_FLOOR`] inside the logarithm; terms with `a = 0`
/// contribute `b`. The pointwise integrand is nonnegative, so the result is
/// nonnegative up to rounding.
pub fn generalized_kl(a: &GridDensity, b: &GridDensity) -> Result<f64> {
    ensure_same_grid(a, b)?;
    let g = &a.grid;
    let mut sum = 0.0;
    for i in 0..g.m {
        let av = a.values[i];
        let bv = b.values[i].max(EPS_FLOOR);
        let term = if av > 0.0 {
            av * (av / bv).ln() + bv - av
        } else {
            bv
        };
        sum += trapezoid_weight(g, i) * term;
    }
    Ok(sum)
}

fn ensure_same_grid(a: &GridDensity, b: &GridDensity) -> Result<()> {
    if !a.grid.same_as(&b.grid) {
        return Err(Error::GridMismatch(
            a.grid.describe(),
            b.grid.describe(),
        ));
    }
    Ok(())
}
