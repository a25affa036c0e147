//! Smoothing kernel: family, bandwidth, and scaled evaluation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 1 / sqrt(2 * pi), the standard normal normalizing constant.
pub(crate) const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Kernel shape. Only the Gaussian kernel is supported; the enum exists so
/// that serialized models name the family explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    /// Standard normal density.
    #[default]
    Gaussian,
}

/// A kernel family together with a strictly positive bandwidth `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    /// Kernel shape.
    pub family: KernelFamily,
    /// Bandwidth `h > 0`.
    pub bandwidth: f64,
}

impl KernelSpec {
    /// Gaussian kernel with the given bandwidth.
    ///
    /// Fails if the bandwidth is not finite and strictly positive.
    pub fn gaussian(bandwidth: f64) -> Result<Self> {
        if !bandwidth.is_finite() || bandwidth <= 0.0 {
            return Err(Error::InvalidBandwidth(bandwidth));
        }
        Ok(Self {
            family: KernelFamily::Gaussian,
            bandwidth,
        })
    }
}

/// Evaluates the scaled kernel `(1/h) K(u/h)` at `u`.
pub fn kernel_eval(spec: &KernelSpec, u: f64) -> f64 {
    let z = u / spec.bandwidth;
    INV_SQRT_2PI * (-0.5 * z * z).exp() / spec.bandwidth
}

/// Data-driven bandwidth `sd * n^(-1/5)`.
///
/// `sd` is the sample standard deviation of the pooled observations and `n`
/// the number of rows. Fails when the dispersion is zero, negative, or not
/// finite, since no sensible bandwidth exists then.
pub fn bandwidth_default(sd: f64, n: usize) -> Result<f64> {
    if !sd.is_finite() || sd <= 0.0 {
        return Err(Error::DegenerateData(sd));
    }
    if n == 0 {
        return Err(Error::Invalid("bandwidth needs n >= 1".into()));
    }
    Ok(sd * (n as f64).powf(-0.2))
}
