//! Crate-wide error type.

use thiserror::Error;

/// Errors reported by grid construction, smoothing, and the solver.
#[derive(Debug, Error)]
pub enum Error {
    /// Grid bounds are not finite or not strictly ordered, or too few points.
    #[error("invalid grid: lo={lo}, hi={hi}, m={m} (need finite lo < hi and m >= 8)")]
    InvalidGrid { lo: f64, hi: f64, m: usize },

    /// Two grid functions were combined but live on different grids.
    #[error("grid mismatch: ({0}) vs ({1})")]
    GridMismatch(String, String),

    /// A bandwidth must be strictly positive and finite.
    #[error("invalid bandwidth {0} (must be finite and > 0)")]
    InvalidBandwidth(f64),

    /// The kernel cannot be resolved on the grid: bandwidth < spacing / 2.
    #[error("bandwidth {bandwidth} under-resolved on grid with spacing {spacing} (need bandwidth >= spacing/2)")]
    KernelUnderResolved { bandwidth: f64, spacing: f64 },

    /// Sample standard deviation vanished, so no data-driven bandwidth exists.
    #[error("degenerate data: standard deviation is {0}, cannot pick a bandwidth")]
    DegenerateData(f64),

    /// A density (or responsibility matrix, weight vector, ...) failed a
    /// shape or positivity check.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// Fewer observations than mixture components.
    #[error("cannot initialize {k} components from {n} observations")]
    TooFewObservations { n: usize, k: usize },

    /// A component's weight collapsed below the guard threshold.
    #[error("component {component} collapsed at iteration {iteration} (weight {weight:.3e})")]
    ComponentCollapse {
        component: usize,
        iteration: usize,
        weight: f64,
    },

    /// The score statistic needs at least two components.
    #[error("score is undefined for a single-component model")]
    ScoreUndefined,

    /// Model (de)serialization failed.
    #[error("serialization: {0}")]
    Serialization(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
