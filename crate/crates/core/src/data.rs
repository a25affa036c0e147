//! Multivariate samples stored row-major.

use crate::error::{Error, Result};

/// An `n x j` matrix of observations: `n` rows, `j` coordinates per row.
///
/// All entries are finite; this is checked once at construction so the
/// numeric code can skip the checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    j: usize,
    /// Row-major entries, `rows[i * j + jj]`.
    rows: Vec<f64>,
}

impl Dataset {
    /// Builds a dataset from row vectors; every row must have the same
    /// length and all entries must be finite.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::Invalid("dataset must be non-empty".into()));
        }
        let j = rows[0].len();
        let mut flat = Vec::with_capacity(rows.len() * j);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != j {
                return Err(Error::Invalid(format!(
                    "row {i} has {} entries, expected {j}",
                    row.len()
                )));
            }
            flat.extend_from_slice(row);
        }
        Self::from_flat(rows.len(), j, flat)
    }

    /// Builds a dataset from a flat row-major buffer.
    pub fn from_flat(n: usize, j: usize, rows: Vec<f64>) -> Result<Self> {
        if n == 0 || j == 0 || rows.len() != n * j {
            return Err(Error::Invalid(format!(
                "flat buffer of {} entries does not match n={n}, j={j}",
                rows.len()
            )));
        }
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("dataset entries must be finite".into()));
        }
        Ok(Self { n, j, rows })
    }

    /// Number of observations.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of coordinates per observation.
    pub fn j(&self) -> usize {
        self.j
    }

    /// Entry at row `i`, coordinate `jj`.
    #[inline]
    pub fn x(&self, i: usize, jj: usize) -> f64 {
        self.rows[i * self.j + jj]
    }

    /// Row `i` as a slice.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.j..(i + 1) * self.j]
    }

    /// Smallest value in coordinate `jj`.
    pub fn column_min(&self, jj: usize) -> f64 {
        (0..self.n).map(|i| self.x(i, jj)).fold(f64::INFINITY, f64::min)
    }

    /// Largest value in coordinate `jj`.
    pub fn column_max(&self, jj: usize) -> f64 {
        (0..self.n)
            .map(|i| self.x(i, jj))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Mean of coordinate `jj`.
    pub fn column_mean(&self, jj: usize) -> f64 {
        (0..self.n).map(|i| self.x(i, jj)).sum::<f64>() / self.n as f64
    }

    /// Sample standard deviation of coordinate `jj`.
    pub fn column_sd(&self, jj: usize) -> f64 {
        sample_sd((0..self.n).map(|i| self.x(i, jj)), self.n)
    }

    /// Sample standard deviation of all `n * j` entries pooled together;
    /// this is the dispersion the default bandwidth rule uses.
    pub fn pooled_sd(&self) -> f64 {
        sample_sd(self.rows.iter().copied(), self.rows.len())
    }
}

fn sample_sd(values: impl Iterator<Item = f64> + Clone, count: usize) -> f64 {
    if count < 2 {
        return 0.0;
    }
    let mean = values.clone().sum::<f64>() / count as f64;
    let ss = values.map(|v| (v - mean) * (v - mean)).sum::<f64>();
    (ss / (count - 1) as f64).sqrt()
}
