//! Fixed-point solver for smoothed nonparametric mixtures.
//!
//! Each iteration performs one majorize-minimize update: posterior weights
//! under the current (smoothed) model, new mixture weights as posterior
//! column means, and one weighted kernel density estimate per component and
//! coordinate. The empirical smoothed loss never increases along the
//! iteration, and the decrease of a fixed-weights step is bounded below by
//! a quarter of the weighted squared L1 step length - the solver can emit
//! that bound as a per-iteration certificate.
//!
//! The per-step cost is dominated by two banded kernel passes (smoothing on
//! the grid and the weighted KDE over the data), both precomputed into
//! windows at fit start, so a fit costs O(iterations * (k * j) * (m + n) *
//! window) flops.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::grid::{trapezoid, Grid, GridDensity};
use crate::kernel::{bandwidth_default, kernel_eval, KernelSpec};
use crate::mixture::{LossValue, MixtureModel, PosteriorMatrix, SIMPLEX_TOL};
use crate::seeding::rng_for_seed;
use crate::smooth::{SmoothOp, TRUNCATION_RADIUS};
use rand::Rng;
use rand_distr::Exp1;

/// Mixture weights at or below this value indicate a collapsed component;
/// the density update refuses to divide by them.
pub const WEIGHT_FLOOR: f64 = 1e-8;

/// Slack allowed when checking a descent certificate.
pub const CERTIFICATE_TOL: f64 = 1e-8;

/// Bandwidth selection for a fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    /// Data-driven rule: pooled sample standard deviation times `n^(-1/5)`.
    Auto,
    /// Fixed user-supplied bandwidth.
    Fixed(f64),
}

/// How the responsibilities are seeded before the first update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMethod {
    /// Independent uniform draws from the simplex for every observation.
    RandomResponsibilities,
    /// Hard assignments from seeded Lloyd iterations on standardized
    /// coordinates.
    KMeansLike,
}

/// Tuning knobs for [`fit`] and [`profile_fit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    /// Number of mixture components.
    pub k: usize,
    /// Bandwidth rule.
    pub bandwidth: Bandwidth,
    /// Grid points per coordinate.
    pub grid_points: usize,
    /// Iteration cap.
    pub max_iters: usize,
    /// Stop once the loss decrease falls below this.
    pub loss_tol: f64,
    /// Initialization scheme.
    pub init: InitMethod,
    /// Seed for all initialization randomness.
    pub seed: u64,
    /// Record a descent certificate for every accepted iteration.
    pub certify_descent: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            k: 2,
            bandwidth: Bandwidth::Auto,
            grid_points: 512,
            max_iters: 500,
            loss_tol: 1e-8,
            init: InitMethod::KMeansLike,
            seed: 0,
            certify_descent: false,
        }
    }
}

/// Proof obligation of one fixed-weights update: the observed loss drop and
/// its theoretical lower bound, a quarter of the weighted squared L1 step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescentCertificate {
    /// Loss before the step minus loss after.
    pub loss_drop: f64,
    /// `(1/4) * sum_k pi_k * sum_j (L1 step of psi_{k,j})^2`.
    pub lower_bound: f64,
    /// Whether `loss_drop >= lower_bound - tolerance`.
    pub satisfied: bool,
}

/// Everything a fit produces.
#[derive(Debug, Clone)]
pub struct FitResult {
    /// Fitted model, components ordered by non-decreasing weight.
    pub model: MixtureModel,
    /// Loss after initialization and after every accepted iteration;
    /// non-increasing.
    pub loss_trajectory: Vec<LossValue>,
    /// Number of accepted iterations (`loss_trajectory.len() - 1`).
    pub iterations: usize,
    /// True when the loss decrease fell below the tolerance before the
    /// iteration cap.
    pub converged: bool,
    /// Posterior memberships under the final model.
    pub posterior: PosteriorMatrix,
    /// One certificate per accepted iteration when requested.
    pub descent_certificates: Option<Vec<DescentCertificate>>,
    /// Rows whose component numerators all underflowed, summed over all
    /// posterior evaluations of the fit.
    pub degeneracy_count: u64,
}

impl FitResult {
    /// Serializes the result (model, trajectory, flags, certificates) with
    /// floats at 17 significant digits. Posterior memberships are not part
    /// of the artifact; recover them by calling
    /// [`SmoothedMixture::posterior_weights`](crate::SmoothedMixture::posterior_weights)
    /// on the reloaded model.
    pub fn to_json(&self) -> Result<String> {
        crate::jsonfmt::to_json_string(&ArtifactRepr {
            model: self.model.to_repr(),
            loss_trajectory: self.loss_trajectory.clone(),
            iterations: self.iterations,
            converged: self.converged,
            degeneracy_count: self.degeneracy_count,
            descent_certificates: self.descent_certificates.clone(),
        })
    }
}

/// A fit reloaded from disk: everything [`FitResult::to_json`] stores.
#[derive(Debug, Clone)]
pub struct FitArtifact {
    /// Fitted model, components ordered as they were written.
    pub model: MixtureModel,
    /// Loss after initialization and after every accepted iteration.
    pub loss_trajectory: Vec<LossValue>,
    /// Number of accepted iterations.
    pub iterations: usize,
    /// Whether the fit stopped on tolerance rather than the iteration cap.
    pub converged: bool,
    /// Underflowed posterior rows accumulated over the fit.
    pub degeneracy_count: u64,
    /// Per-iteration certificates when the fit recorded them.
    pub descent_certificates: Option<Vec<DescentCertificate>>,
}

impl FitArtifact {
    /// Parses a result serialized by [`FitResult::to_json`], re-running all
    /// model validation.
    pub fn from_json(text: &str) -> Result<Self> {
        let repr: ArtifactRepr =
            serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        Ok(Self {
            model: MixtureModel::from_repr(repr.model)?,
            loss_trajectory: repr.loss_trajectory,
            iterations: repr.iterations,
            converged: repr.converged,
            degeneracy_count: repr.degeneracy_count,
            descent_certificates: repr.descent_certificates,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ArtifactRepr {
    model: crate::mixture::ModelRepr,
    loss_trajectory: Vec<LossValue>,
    iterations: usize,
    converged: bool,
    degeneracy_count: u64,
    descent_certificates: Option<Vec<DescentCertificate>>,
}

/// New mixture weights: column means of the posterior matrix.
pub fn proportion_update(posterior: &PosteriorMatrix) -> Vec<f64> {
    posterior.column_means()
}

/// Weighted kernel density update for every component and coordinate.
///
/// For component `k` and coordinate `j`, the grid values are
/// `sum_i omega_{i,k} K_h(x_{i,j} - u) / (n * pi_k)`, renormalized to unit
/// trapezoid mass. Fails when any `new_weights[k] <= WEIGHT_FLOOR`
/// (collapsed component).
pub fn density_update(
    data: &Dataset,
    posterior: &PosteriorMatrix,
    new_weights: &[f64],
    spec: &KernelSpec,
    grids: &[Grid],
) -> Result<Vec<Vec<GridDensity>>> {
    let ws = Workspace::new(data, *spec, grids.to_vec())?;
    ws.density_update(posterior, new_weights, 0)
}

/// One full fixed-point update: posterior under `model`, weight update,
/// density update. Returns the updated model and the posterior of the
/// *input* model that produced it.
pub fn mm_step(model: &MixtureModel, data: &Dataset) -> Result<(MixtureModel, PosteriorMatrix)> {
    let grids: Vec<Grid> = (0..model.j()).map(|jj| *model.grid(jj)).collect();
    let ws = Workspace::new(data, *model.kernel(), grids)?;
    let (_, posterior, _) = ws.evaluate(model)?;
    let weights = proportion_update(&posterior);
    let densities = ws.density_update(&posterior, &weights, 0)?;
    let next = MixtureModel::new(weights, densities, *model.kernel())?;
    Ok((next, posterior))
}

/// One fixed-weights update: like [`mm_step`] but the weights stay at
/// `fixed_pi`, which also replaces the model's weights in the posterior.
pub fn profile_step(
    model: &MixtureModel,
    data: &Dataset,
    fixed_pi: &[f64],
) -> Result<MixtureModel> {
    validate_fixed_pi(fixed_pi, model.k())?;
    let pinned = with_weights(model, fixed_pi)?;
    let grids: Vec<Grid> = (0..pinned.j()).map(|jj| *pinned.grid(jj)).collect();
    let ws = Workspace::new(data, *pinned.kernel(), grids)?;
    let (_, posterior, _) = ws.evaluate(&pinned)?;
    let densities = ws.density_update(&posterior, fixed_pi, 0)?;
    MixtureModel::new(fixed_pi.to_vec(), densities, *pinned.kernel())
}

/// Certificate for the step from `before` to `after` under weights
/// `pi_used`: both losses are evaluated on `data` and the lower bound is a
/// quarter of the `pi`-weighted squared L1 step length.
pub fn descent_certificate(
    before: &MixtureModel,
    after: &MixtureModel,
    data: &Dataset,
    pi_used: &[f64],
) -> Result<DescentCertificate> {
    let LossValue(l0) = before.smoothed()?.empirical_smoothed_loss(data)?;
    let LossValue(l1) = after.smoothed()?.empirical_smoothed_loss(data)?;
    certificate_from_parts(before, after, l0 - l1, pi_used)
}

fn certificate_from_parts(
    before: &MixtureModel,
    after: &MixtureModel,
    loss_drop: f64,
    pi_used: &[f64],
) -> Result<DescentCertificate> {
    if pi_used.len() != before.k() || after.k() != before.k() || after.j() != before.j() {
        return Err(Error::Invalid(
            "certificate needs models of equal shape and one weight per component".into(),
        ));
    }
    let mut bound = 0.0;
    for (kk, &pi_k) in pi_used.iter().enumerate() {
        let mut step = 0.0;
        for jj in 0..before.j() {
            let d = crate::grid::l1_distance(before.density(kk, jj), after.density(kk, jj))?;
            step += d * d;
        }
        bound += pi_k * step;
    }
    bound *= 0.25;
    Ok(DescentCertificate {
        loss_drop,
        lower_bound: bound,
        satisfied: loss_drop >= bound - CERTIFICATE_TOL,
    })
}

/// Builds the initial model for a fit: data-driven kernel and grids, seeded
/// responsibilities, then one weight and density update.
pub fn initialize(data: &Dataset, config: &FitConfig) -> Result<MixtureModel> {
    let ws = Workspace::prepare(data, config)?;
    let resp = initial_responsibilities(data, config)?;
    ws.model_from_responsibilities(&resp)
}

/// Fits the mixture by iterating full fixed-point updates until the loss
/// decrease falls below `loss_tol` or the iteration cap is reached. The
/// returned components are sorted by non-decreasing weight.
pub fn fit(data: &Dataset, config: &FitConfig) -> Result<FitResult> {
    let ws = Workspace::prepare(data, config)?;
    let resp = initial_responsibilities(data, config)?;
    let model = ws.model_from_responsibilities(&resp)?;
    let mut result = ws.iterate(model, config, None)?;

    // Canonical ordering: weights non-decreasing, ties broken by the mean
    // of the first-coordinate density.
    let k = result.model.k();
    let keys: Vec<(f64, f64)> = (0..k)
        .map(|kk| (result.model.weights()[kk], result.model.density(kk, 0).mean()))
        .collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        keys[a]
            .partial_cmp(&keys[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    result.model = result.model.permuted(&order)?;
    result.posterior = result.posterior.permuted_columns(&order);
    Ok(result)
}

/// Fits the component densities with the weights pinned at `fixed_pi`.
/// Components are *not* reordered: they keep the caller's labels.
pub fn profile_fit(data: &Dataset, fixed_pi: &[f64], config: &FitConfig) -> Result<FitResult> {
    validate_fixed_pi(fixed_pi, config.k)?;
    let ws = Workspace::prepare(data, config)?;
    let resp = initial_responsibilities(data, config)?;
    let densities = ws.density_update(&resp, fixed_pi, 0)?;
    let model = MixtureModel::new(fixed_pi.to_vec(), densities, ws.kernel)?;
    ws.iterate(model, config, Some(fixed_pi))
}

fn validate_fixed_pi(fixed_pi: &[f64], k: usize) -> Result<()> {
    if fixed_pi.len() != k {
        return Err(Error::Invalid(format!(
            "fixed weights have length {}, expected k={k}",
            fixed_pi.len()
        )));
    }
    let sum: f64 = fixed_pi.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::Invalid(format!(
            "fixed weights sum to {sum}, expected 1"
        )));
    }
    if fixed_pi.iter().any(|&w| w <= WEIGHT_FLOOR) {
        return Err(Error::Invalid(
            "fixed weights must lie in the interior of the simplex".into(),
        ));
    }
    Ok(())
}

fn with_weights(model: &MixtureModel, weights: &[f64]) -> Result<MixtureModel> {
    let densities = (0..model.k())
        .map(|kk| (0..model.j()).map(|jj| model.density(kk, jj).clone()).collect())
        .collect();
    MixtureModel::new(weights.to_vec(), densities, *model.kernel())
}

fn validate_config(config: &FitConfig, n: usize) -> Result<()> {
    if config.k == 0 {
        return Err(Error::Invalid("need at least one component".into()));
    }
    if n < config.k {
        return Err(Error::TooFewObservations { n, k: config.k });
    }
    if config.grid_points < 8 {
        return Err(Error::InvalidGrid {
            lo: 0.0,
            hi: 1.0,
            m: config.grid_points,
        });
    }
    if config.max_iters == 0 {
        return Err(Error::Invalid("max_iters must be at least 1".into()));
    }
    if !(config.loss_tol.is_finite() && config.loss_tol > 0.0) {
        return Err(Error::Invalid(format!(
            "loss_tol must be positive and finite, got {}",
            config.loss_tol
        )));
    }
    Ok(())
}

/// Resolves the bandwidth rule against the data.
pub fn resolve_kernel(data: &Dataset, config: &FitConfig) -> Result<KernelSpec> {
    let h = match config.bandwidth {
        Bandwidth::Auto => bandwidth_default(data.pooled_sd(), data.n())?,
        Bandwidth::Fixed(h) => h,
    };
    KernelSpec::gaussian(h)
}

/// Per-coordinate fit grids: the data range widened by three bandwidths on
/// each side.
pub fn build_grids(data: &Dataset, spec: &KernelSpec, grid_points: usize) -> Result<Vec<Grid>> {
    let margin = 3.0 * spec.bandwidth;
    (0..data.j())
        .map(|jj| {
            Grid::new(
                data.column_min(jj) - margin,
                data.column_max(jj) + margin,
                grid_points,
            )
        })
        .collect()
}

/// Initial responsibilities for a fit, before any model exists.
pub fn initial_responsibilities(data: &Dataset, config: &FitConfig) -> Result<PosteriorMatrix> {
    validate_config(config, data.n())?;
    let (n, k) = (data.n(), config.k);
    let values = match config.init {
        InitMethod::RandomResponsibilities => {
            let mut rng = rng_for_seed(config.seed);
            let mut values = vec![0.0; n * k];
            for row in values.chunks_mut(k) {
                let mut sum = 0.0;
                for v in row.iter_mut() {
                    let e: f64 = rng.sample(Exp1);
                    *v = e;
                    sum += e;
                }
                for v in row.iter_mut() {
                    *v /= sum;
                }
            }
            values
        }
        InitMethod::KMeansLike => {
            let assignment = lloyd_assignments(data, k, config.seed);
            let mut values = vec![0.0; n * k];
            for (i, &a) in assignment.iter().enumerate() {
                values[i * k + a] = 1.0;
            }
            values
        }
    };
    PosteriorMatrix::new(n, k, values)
}

/// Hard cluster labels from seeded Lloyd iterations on standardized
/// coordinates. Deterministic in (data, k, seed); empty clusters are
/// reseeded with the point farthest from its current center.
fn lloyd_assignments(data: &Dataset, k: usize, seed: u64) -> Vec<usize> {
    let (n, j) = (data.n(), data.j());
    // Standardize so no coordinate dominates the distances.
    let mut z = vec![0.0; n * j];
    for jj in 0..j {
        let mean = data.column_mean(jj);
        let sd = data.column_sd(jj);
        let scale = if sd > 0.0 { 1.0 / sd } else { 1.0 };
        for i in 0..n {
            z[i * j + jj] = (data.x(i, jj) - mean) * scale;
        }
    }
    // K distinct starting centers drawn without replacement.
    let mut rng = rng_for_seed(seed);
    let mut index: Vec<usize> = (0..n).collect();
    for t in 0..k {
        let pick = t + rng.random_range(0..n - t);
        index.swap(t, pick);
    }
    let mut centers = vec![0.0; k * j];
    for (c, &i) in index[..k].iter().enumerate() {
        centers[c * j..(c + 1) * j].copy_from_slice(&z[i * j..(i + 1) * j]);
    }

    let dist2 = |zi: &[f64], c: &[f64]| -> f64 {
        zi.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum()
    };
    let mut assignment = vec![0usize; n];
    for _round in 0..100 {
        let mut changed = false;
        for i in 0..n {
            let zi = &z[i * j..(i + 1) * j];
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for c in 0..k {
                let d = dist2(zi, &centers[c * j..(c + 1) * j]);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if assignment[i] != best {
                assignment[i] = best;
                changed = true;
            }
        }
        // Reseed empty clusters with the worst-fitting point.
        let mut counts = vec![0usize; k];
        for &a in &assignment {
            counts[a] += 1;
        }
        for c in 0..k {
            if counts[c] == 0 {
                let (mut far_i, mut far_d) = (0, -1.0);
                for i in 0..n {
                    if counts[assignment[i]] <= 1 {
                        continue;
                    }
                    let d = dist2(
                        &z[i * j..(i + 1) * j],
                        &centers[assignment[i] * j..(assignment[i] + 1) * j],
                    );
                    if d > far_d {
                        far_d = d;
                        far_i = i;
                    }
                }
                counts[assignment[far_i]] -= 1;
                assignment[far_i] = c;
                counts[c] = 1;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        centers.fill(0.0);
        for i in 0..n {
            let c = assignment[i];
            for jj in 0..j {
                centers[c * j + jj] += z[i * j + jj];
            }
        }
        for c in 0..k {
            for jj in 0..j {
                centers[c * j + jj] /= counts[c] as f64;
            }
        }
    }
    assignment
}

/// Precomputed per-fit structures: grids, smoothing operators, and banded
/// kernel evaluations between every observation and its nearby grid points.
struct Workspace<'a> {
    data: &'a Dataset,
    kernel: KernelSpec,
    grids: Vec<Grid>,
    ops: Vec<SmoothOp>,
    bands: Vec<Band>,
}

/// For one coordinate: kernel values `K_h(x_i - u_p)` for the grid points
/// `p` within the truncation window of each observation, stored contiguously.
struct Band {
    start: Vec<usize>,
    offset: Vec<usize>,
    vals: Vec<f64>,
}

impl Band {
    fn new(data: &Dataset, j_idx: usize, grid: &Grid, spec: &KernelSpec) -> Self {
        let n = data.n();
        let radius = TRUNCATION_RADIUS * spec.bandwidth;
        let d = grid.spacing();
        let mut start = Vec::with_capacity(n);
        let mut offset = Vec::with_capacity(n + 1);
        let mut vals = Vec::new();
        offset.push(0);
        for i in 0..n {
            let x = data.x(i, j_idx);
            let p_lo = (((x - radius) - grid.lo) / d).ceil().max(0.0) as usize;
            let p_hi = ((((x + radius) - grid.lo) / d).floor() as isize)
                .min(grid.m as isize - 1);
            if p_hi < p_lo as isize {
                start.push(0);
                offset.push(vals.len());
                continue;
            }
            start.push(p_lo);
            for p in p_lo..=(p_hi as usize) {
                vals.push(kernel_eval(spec, x - grid.point(p)));
            }
            offset.push(vals.len());
        }
        Self { start, offset, vals }
    }
}

impl<'a> Workspace<'a> {
    fn prepare(data: &'a Dataset, config: &FitConfig) -> Result<Self> {
        validate_config(config, data.n())?;
        let kernel = resolve_kernel(data, config)?;
        let grids = build_grids(data, &kernel, config.grid_points)?;
        Self::new(data, kernel, grids)
    }

    fn new(data: &'a Dataset, kernel: KernelSpec, grids: Vec<Grid>) -> Result<Self> {
        if grids.len() != data.j() {
            return Err(Error::Invalid(format!(
                "{} grids for {} coordinates",
                grids.len(),
                data.j()
            )));
        }
        let ops = grids
            .iter()
            .map(|g| SmoothOp::new(*g, &kernel))
            .collect::<Result<Vec<_>>>()?;
        let bands = (0..data.j())
            .map(|jj| Band::new(data, jj, &grids[jj], &kernel))
            .collect();
        Ok(Self {
            data,
            kernel,
            grids,
            ops,
            bands,
        })
    }

    /// Loss, posterior, and degenerate-row count of `model` on the data.
    fn evaluate(&self, model: &MixtureModel) -> Result<(f64, PosteriorMatrix, u64)> {
        let smoothed = model.smoothed_with_ops(&self.ops)?;
        let (LossValue(loss), posterior, degenerate) =
            smoothed.loss_and_posterior(self.data)?;
        Ok((loss, posterior, degenerate))
    }

    /// Weighted KDE update of every (component, coordinate) density.
    fn density_update(
        &self,
        posterior: &PosteriorMatrix,
        pi_tilde: &[f64],
        iteration: usize,
    ) -> Result<Vec<Vec<GridDensity>>> {
        let (n, k) = (self.data.n(), pi_tilde.len());
        if posterior.n() != n || posterior.k() != k {
            return Err(Error::Invalid(
                "posterior shape does not match data and weights".into(),
            ));
        }
        for (kk, &w) in pi_tilde.iter().enumerate() {
            if w <= WEIGHT_FLOOR {
                return Err(Error::ComponentCollapse {
                    component: kk,
                    iteration,
                    weight: w,
                });
            }
        }
        let mut per_component: Vec<Vec<GridDensity>> = vec![Vec::new(); k];
        for (jj, band) in self.bands.iter().enumerate() {
            let grid = &self.grids[jj];
            let m = grid.m;
            let mut acc = vec![0.0; k * m];
            for i in 0..n {
                let row = posterior.row(i);
                let lo = band.offset[i];
                let hi = band.offset[i + 1];
                if hi == lo {
                    continue;
                }
                let vals = &band.vals[lo..hi];
                let p0 = band.start[i];
                for (kk, &w) in row.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    let dst = &mut acc[kk * m + p0..kk * m + p0 + vals.len()];
                    for (d, &v) in dst.iter_mut().zip(vals) {
                        *d += w * v;
                    }
                }
            }
            for kk in 0..k {
                let inv = 1.0 / (n as f64 * pi_tilde[kk]);
                let mut values: Vec<f64> =
                    acc[kk * m..(kk + 1) * m].iter().map(|v| v * inv).collect();
                let mass = trapezoid(grid, &values);
                if !(mass.is_finite() && mass > 0.0) {
                    return Err(Error::ComponentCollapse {
                        component: kk,
                        iteration,
                        weight: pi_tilde[kk],
                    });
                }
                for v in &mut values {
                    *v /= mass;
                }
                per_component[kk].push(GridDensity::new_density(*grid, values)?);
            }
        }
        Ok(per_component)
    }

    /// First model of a fit: weights and densities from one update pass on
    /// the initial responsibilities.
    fn model_from_responsibilities(&self, resp: &PosteriorMatrix) -> Result<MixtureModel> {
        let weights = proportion_update(resp);
        let densities = self.density_update(resp, &weights, 0)?;
        MixtureModel::new(weights, densities, self.kernel)
    }

    /// Iterates updates from `model` until convergence. `fixed_pi = None`
    /// runs full steps; `Some(pi)` keeps the weights pinned.
    fn iterate(
        &self,
        model: MixtureModel,
        config: &FitConfig,
        fixed_pi: Option<&[f64]>,
    ) -> Result<FitResult> {
        let mut certificates = config.certify_descent.then(Vec::new);
        let mut model = model;
        let (mut loss, mut posterior, mut degenerate_total) = self.evaluate(&model)?;
        let mut trajectory = vec![LossValue(loss)];
        let mut iterations = 0;
        let mut converged = false;

        for iter in 1..=config.max_iters {
            let weights: Vec<f64> = match fixed_pi {
                Some(pi) => pi.to_vec(),
                None => proportion_update(&posterior),
            };
            if let (None, Some((kk, &w))) = (
                fixed_pi,
                weights
                    .iter()
                    .enumerate()
                    .find(|(_, &w)| w <= WEIGHT_FLOOR),
            ) {
                return Err(Error::ComponentCollapse {
                    component: kk,
                    iteration: iter,
                    weight: w,
                });
            }
            let densities = self.density_update(&posterior, &weights, iter)?;
            let candidate = MixtureModel::new(weights, densities, self.kernel)?;
            let (cand_loss, cand_posterior, cand_degenerate) = self.evaluate(&candidate)?;
            let drop = loss - cand_loss;
            if drop < 0.0 {
                // The exact update never increases the loss; a negative drop
                // is floating-point noise at the fixed point. Keep the
                // current model and stop.
                converged = true;
                break;
            }
            if let Some(certs) = certificates.as_mut() {
                certs.push(certificate_from_parts(
                    &model,
                    &candidate,
                    drop,
                    candidate.weights(),
                )?);
            }
            model = candidate;
            loss = cand_loss;
            posterior = cand_posterior;
            degenerate_total += cand_degenerate;
            trajectory.push(LossValue(loss));
            iterations += 1;
            if drop < config.loss_tol {
                converged = true;
                break;
            }
        }

        Ok(FitResult {
            model,
            loss_trajectory: trajectory,
            iterations,
            converged,
            posterior,
            descent_certificates: certificates,
            degeneracy_count: degenerate_total,
        })
    }
}
