//! Synthetic two-component location mixtures used in the experiments.
//!
//! A draw picks component 1 with probability 1/3 (else component 2), then
//! samples `d` independent coordinates from a base density `F0` shifted by
//! `-1/sqrt(d)` for component 1 and `+1/sqrt(d)` for component 2. The
//! `1/sqrt(d)` scaling keeps the overall separation comparable across
//! dimensions. Coordinates share the component label but are otherwise
//! independent, matching the model the solver fits.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::grid::{Grid, GridDensity};
use crate::seeding::rng_for_seed;

/// Mixture weight of component 1; component 2 has the complement.
pub const WEIGHT_1: f64 = 1.0 / 3.0;

/// Base density of the coordinates before shifting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Standard normal.
    Gaussian,
    /// Student's t with 3 degrees of freedom.
    StudentT3,
    /// Laplace (double exponential) with unit scale.
    Laplace,
}

impl Family {
    /// All supported families, in the order reports list them.
    pub const ALL: [Family; 3] = [Family::Gaussian, Family::StudentT3, Family::Laplace];

    /// Short lowercase name used in CLI flags and CSV columns.
    pub fn name(&self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::StudentT3 => "student",
            Family::Laplace => "laplace",
        }
    }

    /// Parses [`Family::name`] (case-insensitive).
    pub fn parse(text: &str) -> Result<Self> {
        match text.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(Family::Gaussian),
            "student" | "student-t3" | "t3" => Ok(Family::StudentT3),
            "laplace" => Ok(Family::Laplace),
            other => Err(Error::Invalid(format!("unknown family '{other}'"))),
        }
    }

    /// Density of the (unshifted) base distribution at `x`.
    pub fn density(&self, x: f64) -> f64 {
        match self {
            Family::Gaussian => crate::kernel::INV_SQRT_2PI * (-0.5 * x * x).exp(),
            // t with 3 degrees of freedom: 2 / (sqrt(3) pi (1 + x^2/3)^2).
            Family::StudentT3 => {
                let w = 1.0 + x * x / 3.0;
                2.0 / (3f64.sqrt() * std::f64::consts::PI * w * w)
            }
            Family::Laplace => 0.5 * (-x.abs()).exp(),
        }
    }

    /// One draw from the base distribution.
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Family::Gaussian => StandardNormal.sample(rng),
            // Z / sqrt(V/3) with V chi-square(3), built from normals so the
            // draw sequence is identical on every platform with this seed.
            Family::StudentT3 => {
                let z: f64 = StandardNormal.sample(rng);
                let mut v = 0.0;
                for _ in 0..3 {
                    let g: f64 = StandardNormal.sample(rng);
                    v += g * g;
                }
                z / (v / 3.0).sqrt()
            }
            // Inverse CDF of the double exponential. The floor keeps the
            // (probability 2^-53) draw u = 0 from producing an infinity.
            Family::Laplace => {
                let u: f64 = rng.random();
                let centered = u - 0.5;
                let inner = (1.0 - 2.0 * centered.abs()).max(f64::MIN_POSITIVE);
                -centered.signum() * inner.ln()
            }
        }
    }
}

/// Specification of a synthetic mixture: base family and dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    /// Base density of every coordinate.
    pub family: Family,
    /// Number of coordinates (the experiments use 3).
    pub d: usize,
}

impl SyntheticSpec {
    /// Builds a spec, requiring at least one coordinate.
    pub fn new(family: Family, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Invalid("dimension must be at least 1".into()));
        }
        Ok(Self { family, d })
    }

    /// Component weights, `(1/3, 2/3)`.
    pub fn weights(&self) -> [f64; 2] {
        [WEIGHT_1, 1.0 - WEIGHT_1]
    }

    /// Location shift of component `c` (0-based): `-1/sqrt(d)` for the
    /// first component, `+1/sqrt(d)` for the second.
    pub fn shift(&self, c: usize) -> f64 {
        let s = 1.0 / (self.d as f64).sqrt();
        if c == 0 {
            -s
        } else {
            s
        }
    }
}

/// A synthetic sample with its generating component labels.
#[derive(Debug, Clone)]
pub struct LabeledSample {
    /// The observations, `n x d`.
    pub data: Dataset,
    /// Component labels, 1 or 2, one per row.
    pub labels: Vec<u8>,
}

/// Draws `n` labeled observations. Deterministic in `(spec, n, seed)`.
pub fn sample(spec: &SyntheticSpec, n: usize, seed: u64) -> Result<LabeledSample> {
    if n == 0 {
        return Err(Error::Invalid("cannot sample an empty dataset".into()));
    }
    let mut rng = rng_for_seed(seed);
    let mut rows = Vec::with_capacity(n * spec.d);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random();
        let c = usize::from(u >= WEIGHT_1); // 0 with probability 1/3
        let shift = spec.shift(c);
        labels.push(c as u8 + 1);
        for _ in 0..spec.d {
            rows.push(spec.family.draw(&mut rng) + shift);
        }
    }
    Ok(LabeledSample {
        data: Dataset::from_flat(n, spec.d, rows)?,
        labels,
    })
}

/// Exact marginal density of component `c` (0-based) tabulated on `grid`;
/// identical for every coordinate.
pub fn true_marginal(spec: &SyntheticSpec, c: usize, grid: &Grid) -> Result<GridDensity> {
    if c > 1 {
        return Err(Error::Invalid(format!("component {c} out of range")));
    }
    let shift = spec.shift(c);
    let values = (0..grid.m)
        .map(|i| spec.family.density(grid.point(i) - shift))
        .collect();
    GridDensity::new_unnormalized(*grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_densities_normalize() {
        // Fine-grid quadrature over a wide range; the Student t has the
        // heaviest tails, with about 4e-3 of mass beyond +-8, so widen the
        // range until every family is covered to 1e-6.
        for family in Family::ALL {
            let grid = Grid::new(-600.0, 600.0, 2_000_001).unwrap();
            let d = true_marginal(&SyntheticSpec::new(family, 1).unwrap(), 0, &grid).unwrap();
            let mass = d.integral();
            assert!(
                (mass - 1.0).abs() < 1e-6,
                "{} integrates to {mass}",
                family.name()
            );
        }
    }

    #[test]
    fn known_density_values() {
        assert!((Family::Gaussian.density(0.0) - 0.3989422804014327).abs() < 1e-15);
        // t3 at the mode: 2 / (sqrt(3) pi).
        assert!((Family::StudentT3.density(0.0) - 0.36755259694786135).abs() < 1e-15);
        assert!((Family::Laplace.density(0.0) - 0.5).abs() < 1e-15);
        assert!((Family::Laplace.density(2.0) - 0.5 * (-2.0f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn shifts_scale_with_dimension() {
        let spec = SyntheticSpec::new(Family::Gaussian, 3).unwrap();
        assert!((spec.shift(0) + 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((spec.shift(1) - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        let spec = SyntheticSpec::new(Family::Gaussian, 1).unwrap();
        assert_eq!(spec.shift(0), -1.0);
    }

    #[test]
    fn sampling_is_deterministic_and_labeled() {
        let spec = SyntheticSpec::new(Family::Laplace, 3).unwrap();
        let a = sample(&spec, 50, 9).unwrap();
        let b = sample(&spec, 50, 9).unwrap();
        assert_eq!(a.data, b.data);
        assert_eq!(a.labels, b.labels);
        assert!(a.labels.iter().all(|&l| l == 1 || l == 2));
        assert_eq!(a.data.j(), 3);
    }

    #[test]
    fn label_frequencies_match_the_weights() {
        let spec = SyntheticSpec::new(Family::Gaussian, 2).unwrap();
        let s = sample(&spec, 100_000, 1234).unwrap();
        let ones = s.labels.iter().filter(|&&l| l == 1).count() as f64;
        let frac = ones / 100_000.0;
        assert!(
            (frac - WEIGHT_1).abs() < 0.005,
            "component 1 frequency {frac} far from 1/3"
        );
    }

    #[test]
    fn sample_moments_match_the_families() {
        // Mixture mean of each coordinate: (1/3)(-s) + (2/3)(+s) = s/3 with
        // s = 1/sqrt(d). Variances: base variance + shift spread around the
        // mean: var = var0 + s^2 - (s/3)^2 = var0 + (8/9) s^2.
        let n = 200_000;
        for (family, var0) in [
            (Family::Gaussian, 1.0),
            (Family::StudentT3, 3.0),
            (Family::Laplace, 2.0),
        ] {
            let spec = SyntheticSpec::new(family, 3).unwrap();
            let s = sample(&spec, n, 77).unwrap();
            let shift = 1.0 / 3f64.sqrt();
            for jj in 0..3 {
                let mean = s.data.column_mean(jj);
                assert!(
                    (mean - shift / 3.0).abs() < 0.02,
                    "{}: coordinate {jj} mean {mean}",
                    family.name()
                );
            }
            // Pooled second moment is noisier for the t3 family; allow a
            // generous band.
            let sd = s.data.pooled_sd();
            let expect = (var0 + 8.0 / 9.0 * shift * shift).sqrt();
            let tol = if family == Family::StudentT3 { 0.2 } else { 0.02 };
            assert!(
                (sd - expect).abs() < tol,
                "{}: pooled sd {sd}, expected about {expect}",
                family.name()
            );
        }
    }

    #[test]
    fn coordinates_are_uncorrelated_within_the_mixture_components() {
        // Conditional on the label, coordinates are independent; check the
        // within-component correlation rather than the marginal one (the
        // shared shift correlates the unconditional coordinates).
        let spec = SyntheticSpec::new(Family::Gaussian, 2).unwrap();
        let s = sample(&spec, 100_000, 4321).unwrap();
        for target in [1u8, 2u8] {
            let rows: Vec<&[f64]> = (0..s.data.n())
                .filter(|&i| s.labels[i] == target)
                .map(|i| s.data.row(i))
                .collect();
            let n = rows.len() as f64;
            let mean0 = rows.iter().map(|r| r[0]).sum::<f64>() / n;
            let mean1 = rows.iter().map(|r| r[1]).sum::<f64>() / n;
            let mut cov = 0.0;
            let mut var0 = 0.0;
            let mut var1 = 0.0;
            for r in &rows {
                cov += (r[0] - mean0) * (r[1] - mean1);
                var0 += (r[0] - mean0) * (r[0] - mean0);
                var1 += (r[1] - mean1) * (r[1] - mean1);
            }
            let corr = cov / (var0.sqrt() * var1.sqrt());
            assert!(
                corr.abs() < 0.01,
                "component {target}: correlation {corr} should vanish"
            );
        }
    }
}
