//! Nonparametric mixtures of products of univariate densities, fitted by a
//! monotone fixed-point iteration on a log-domain kernel smoothing of the
//! likelihood.
//!
//! The crate is organized around five pieces:
//!
//! - [`grid`]: uniform grids, tabulated densities, trapezoid quadrature,
//!   L1 distance and generalized Kullback-Leibler divergence;
//! - [`smooth`]: the log-domain kernel smoothing operator that turns
//!   densities into subdensities and makes the loss well-behaved;
//! - [`mixture`]: mixture models, smoothed likelihood evaluation,
//!   posteriors, loss, and score;
//! - [`solver`]: initialization and the descent iteration, with optional
//!   per-step descent certificates;
//! - [`synthetic`]: the two-component location mixtures used by the
//!   benchmark harness.
//!
//! Everything is deterministic given a seed: all randomness flows through
//! counter-seeded generators from [`seeding`].

pub mod data;
pub mod error;
pub mod grid;
pub mod jsonfmt;
pub mod kernel;
pub mod mixture;
pub mod seeding;
pub mod smooth;
pub mod solver;
pub mod synthetic;

pub use data::Dataset;
pub use error::{Error, Result};
pub use grid::{
    generalized_kl, interpolate_at, l1_distance, trapezoid, Grid, GridDensity, EPS_FLOOR,
};
pub use kernel::{bandwidth_default, kernel_eval, KernelFamily, KernelSpec};
pub use mixture::{LossValue, MixtureModel, PosteriorMatrix, SmoothedMixture};
pub use smooth::{smooth_log_density, SmoothOp};
pub use solver::{
    density_update, descent_certificate, fit, initialize, mm_step, profile_fit, profile_step,
    proportion_update, Bandwidth, DescentCertificate, FitArtifact, FitConfig, FitResult,
    InitMethod, WEIGHT_FLOOR,
};
pub use synthetic::{sample, true_marginal, Family, LabeledSample, SyntheticSpec};
