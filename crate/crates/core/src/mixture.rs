//! Mixture models with one nonparametric density per component and
//! coordinate, and their smoothed evaluation.
//!
//! A model holds `k` mixture weights and a `k x j` table of grid densities;
//! coordinates are independent within a component, so a component's joint
//! density is the product of its per-coordinate densities. All likelihood
//! work (posteriors, loss, score) evaluates the *smoothed* component
//! densities, which is what makes the fixed-point iteration in the solver
//! monotone.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::grid::{Grid, GridDensity, EPS_FLOOR};
use crate::kernel::KernelSpec;
use crate::smooth::SmoothOp;

/// Allowed drift of a weight vector or posterior row away from sum one.
pub const SIMPLEX_TOL: f64 = 1e-10;

/// Empirical smoothed negative log-likelihood, up to the additive entropy
/// of the data-generating density (constant in the model, so dropped).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LossValue(pub f64);

/// A `k`-component mixture of products of univariate grid densities.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModel {
    weights: Vec<f64>,
    /// `k * j` densities, component-major: entry `k_idx * j + j_idx`.
    densities: Vec<GridDensity>,
    kernel: KernelSpec,
    k: usize,
    j: usize,
}

impl MixtureModel {
    /// Builds and validates a model from a `k x j` table of densities.
    ///
    /// Checks: weights on the simplex (within [`SIMPLEX_TOL`]), every
    /// density integrating to one, and for each coordinate a single shared
    /// grid across components.
    pub fn new(
        weights: Vec<f64>,
        densities: Vec<Vec<GridDensity>>,
        kernel: KernelSpec,
    ) -> Result<Self> {
        let k = weights.len();
        if k == 0 || densities.len() != k {
            return Err(Error::Invalid(format!(
                "expected one density row per component, got {} rows for k={k}",
                densities.len()
            )));
        }
        validate_simplex(&weights, "mixture weights")?;
        let j = densities[0].len();
        if j == 0 || densities.iter().any(|row| row.len() != j) {
            return Err(Error::Invalid(
                "every component needs the same number of coordinate densities".into(),
            ));
        }
        let mut flat = Vec::with_capacity(k * j);
        for row in densities {
            for d in row {
                flat.push(d);
            }
        }
        for jj in 0..j {
            let g0 = flat[jj].grid;
            for kk in 1..k {
                if !flat[kk * j + jj].grid.same_as(&g0) {
                    return Err(Error::GridMismatch(
                        format!("coordinate {jj}, component 0"),
                        format!("coordinate {jj}, component {kk}"),
                    ));
                }
            }
        }
        for (idx, d) in flat.iter().enumerate() {
            let mass = d.integral();
            if (mass - 1.0).abs() > 1e-3 {
                return Err(Error::Invalid(format!(
                    "component density {} integrates to {mass}, expected 1",
                    idx
                )));
            }
        }
        Ok(Self {
            weights,
            densities: flat,
            kernel,
            k,
            j,
        })
    }

    /// Number of components.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of coordinates.
    pub fn j(&self) -> usize {
        self.j
    }

    /// Mixture weights.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Kernel used for smoothing and fitting.
    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    /// Density of component `k_idx` in coordinate `j_idx`.
    pub fn density(&self, k_idx: usize, j_idx: usize) -> &GridDensity {
        &self.densities[k_idx * self.j + j_idx]
    }

    /// The shared evaluation grid of coordinate `j_idx`.
    pub fn grid(&self, j_idx: usize) -> &Grid {
        &self.densities[j_idx].grid
    }

    /// The model with components reordered by `perm` (new index -> old
    /// index). Used for canonical ordering and in equivariance tests.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.k {
            return Err(Error::Invalid("permutation length != k".into()));
        }
        let mut seen = vec![false; self.k];
        for &p in perm {
            if p >= self.k || seen[p] {
                return Err(Error::Invalid("not a permutation".into()));
            }
            seen[p] = true;
        }
        let weights = perm.iter().map(|&p| self.weights[p]).collect();
        let densities = perm
            .iter()
            .flat_map(|&p| {
                (0..self.j).map(move |jj| self.densities[p * self.j + jj].clone())
            })
            .collect();
        Ok(Self {
            weights,
            densities,
            kernel: self.kernel,
            k: self.k,
            j: self.j,
        })
    }

    /// Smooths every component density, caching the results for repeated
    /// likelihood evaluation.
    pub fn smoothed(&self) -> Result<SmoothedMixture<'_>> {
        let mut ops: Vec<SmoothOp> = Vec::with_capacity(self.j);
        for jj in 0..self.j {
            ops.push(SmoothOp::new(*self.grid(jj), &self.kernel)?);
        }
        self.smoothed_with_ops(&ops)
    }

    /// Like [`MixtureModel::smoothed`] but reusing prebuilt per-coordinate
    /// operators; the solver rebuilds models every iteration and keeps the
    /// operators across them.
    pub(crate) fn smoothed_with_ops(&self, ops: &[SmoothOp]) -> Result<SmoothedMixture<'_>> {
        if ops.len() != self.j || (0..self.j).any(|jj| !ops[jj].grid().same_as(self.grid(jj))) {
            return Err(Error::Invalid(
                "smoothing operators do not match the model grids".into(),
            ));
        }
        let mut smoothed = Vec::with_capacity(self.k * self.j);
        for kk in 0..self.k {
            for (jj, op) in ops.iter().enumerate() {
                smoothed.push(op.apply(self.density(kk, jj))?);
            }
        }
        Ok(SmoothedMixture {
            model: self,
            smoothed,
        })
    }

    /// On-disk representation of the model.
    pub(crate) fn to_repr(&self) -> ModelRepr {
        let grids: Vec<Grid> = (0..self.j).map(|jj| *self.grid(jj)).collect();
        let values = (0..self.k)
            .map(|kk| {
                (0..self.j)
                    .map(|jj| self.density(kk, jj).values.clone())
                    .collect()
            })
            .collect();
        ModelRepr {
            k: self.k,
            j: self.j,
            weights: self.weights.clone(),
            kernel: self.kernel,
            grids,
            values,
        }
    }

    /// Rebuilds a model from its on-disk representation, re-running all
    /// construction-time validation.
    pub(crate) fn from_repr(repr: ModelRepr) -> Result<Self> {
        if repr.grids.len() != repr.j || repr.values.len() != repr.k {
            return Err(Error::Serialization(
                "model dimensions disagree with grid/value tables".into(),
            ));
        }
        let mut densities = Vec::with_capacity(repr.k);
        for row in repr.values {
            if row.len() != repr.j {
                return Err(Error::Serialization("ragged value table".into()));
            }
            let mut drow = Vec::with_capacity(repr.j);
            for (jj, vals) in row.into_iter().enumerate() {
                drow.push(GridDensity::new_unnormalized(repr.grids[jj], vals)?);
            }
            densities.push(drow);
        }
        Self::new(repr.weights, densities, repr.kernel)
    }

    /// Serializes the model to JSON with floats at 17 significant digits,
    /// enough for a bit-exact round trip.
    pub fn to_json(&self) -> Result<String> {
        crate::jsonfmt::to_json_string(&self.to_repr())
    }

    /// Parses a model serialized by [`MixtureModel::to_json`].
    pub fn from_json(text: &str) -> Result<Self> {
        let repr: ModelRepr =
            serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        Self::from_repr(repr)
    }
}

/// On-disk shape of a model: dimensions, weights, kernel, per-coordinate
/// grids, and the `k x j x m` table of density values.
#[derive(Serialize, Deserialize)]
pub(crate) struct ModelRepr {
    k: usize,
    j: usize,
    weights: Vec<f64>,
    kernel: KernelSpec,
    grids: Vec<Grid>,
    values: Vec<Vec<Vec<f64>>>,
}

/// Posterior component memberships: one row per observation, rows on the
/// simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorMatrix {
    n: usize,
    k: usize,
    /// Row-major `n x k` responsibilities.
    values: Vec<f64>,
}

impl PosteriorMatrix {
    /// Builds and validates a responsibility matrix: entries in `[0, 1]`,
    /// every row summing to one within [`SIMPLEX_TOL`].
    pub fn new(n: usize, k: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || k == 0 || values.len() != n * k {
            return Err(Error::Invalid(format!(
                "posterior buffer of {} entries does not match n={n}, k={k}",
                values.len()
            )));
        }
        for i in 0..n {
            validate_simplex(&values[i * k..(i + 1) * k], "posterior row")?;
        }
        Ok(Self { n, k, values })
    }

    /// Number of rows.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of components.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Responsibilities of observation `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.k..(i + 1) * self.k]
    }

    /// Column means; these are the weight updates of the fixed-point step.
    pub fn column_means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.k];
        for i in 0..self.n {
            for (m, v) in means.iter_mut().zip(self.row(i)) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= self.n as f64;
        }
        means
    }

    /// Columns reordered by `perm` (new index -> old index).
    pub fn permuted_columns(&self, perm: &[usize]) -> Self {
        let mut values = Vec::with_capacity(self.values.len());
        for i in 0..self.n {
            let row = self.row(i);
            values.extend(perm.iter().map(|&p| row[p]));
        }
        Self {
            n: self.n,
            k: self.k,
            values,
        }
    }
}

fn validate_simplex(w: &[f64], what: &str) -> Result<()> {
    if w.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0 + SIMPLEX_TOL) {
        return Err(Error::Invalid(format!("{what} entries must lie in [0, 1]")));
    }
    let sum: f64 = w.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::Invalid(format!(
            "{what} sums to {sum}, expected 1 within {SIMPLEX_TOL}"
        )));
    }
    Ok(())
}

/// A model together with its smoothed component densities, ready for
/// likelihood evaluation.
pub struct SmoothedMixture<'a> {
    model: &'a MixtureModel,
    /// `k * j` smoothed subdensities, component-major like the model's.
    smoothed: Vec<GridDensity>,
}

impl SmoothedMixture<'_> {
    /// The underlying model.
    pub fn model(&self) -> &MixtureModel {
        self.model
    }

    /// Smoothed density of component `k_idx` in coordinate `j_idx`.
    pub fn smoothed_density(&self, k_idx: usize, j_idx: usize) -> &GridDensity {
        &self.smoothed[k_idx * self.model.j + j_idx]
    }

    /// Smoothed joint density of one component at a point: the product of
    /// the interpolated smoothed coordinate densities.
    pub fn component_at(&self, k_idx: usize, x: &[f64]) -> f64 {
        let mut scratch = vec![0.0; self.model.k];
        self.components_into(x, &mut scratch);
        scratch[k_idx]
    }

    /// Smoothed mixture density at a point, floored at [`EPS_FLOOR`].
    pub fn mixture_at(&self, x: &[f64]) -> f64 {
        let mut scratch = vec![0.0; self.model.k];
        self.components_into(x, &mut scratch);
        self.mix(&scratch).max(EPS_FLOOR)
    }

    /// Fills `out[k]` with the smoothed joint density of component `k` at
    /// `x`. Interpolation cells are shared across components, which is what
    /// the solver's inner loop relies on for speed.
    fn components_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.model.j);
        debug_assert_eq!(out.len(), self.model.k);
        out.fill(1.0);
        let jn = self.model.j;
        for (jj, &xj) in x.iter().enumerate() {
            let g = self.model.grid(jj);
            if !(xj >= g.lo && xj <= g.hi) {
                for v in out.iter_mut() {
                    *v *= EPS_FLOOR;
                }
                continue;
            }
            let pos = (xj - g.lo) / g.spacing();
            let cell = (pos.floor() as usize).min(g.m - 2);
            let t = pos - cell as f64;
            for (kk, v) in out.iter_mut().enumerate() {
                let vals = &self.smoothed[kk * jn + jj].values;
                *v *= (1.0 - t) * vals[cell] + t * vals[cell + 1];
            }
        }
    }

    #[inline]
    fn mix(&self, components: &[f64]) -> f64 {
        self.model
            .weights
            .iter()
            .zip(components)
            .map(|(w, c)| w * c)
            .sum()
    }

    /// Posterior membership weights of every observation, plus the count of
    /// degenerate rows (all component numerators underflowed to zero) that
    /// were replaced by the uniform distribution.
    pub fn posterior_weights(&self, data: &Dataset) -> Result<(PosteriorMatrix, u64)> {
        let (_, posterior, degenerate) = self.loss_and_posterior(data)?;
        Ok((posterior, degenerate))
    }

    /// Empirical smoothed loss: minus the average log smoothed mixture
    /// density of the sample.
    pub fn empirical_smoothed_loss(&self, data: &Dataset) -> Result<LossValue> {
        let (loss, _, _) = self.loss_and_posterior(data)?;
        Ok(loss)
    }

    /// One pass over the data computing the loss, the posterior matrix, and
    /// the degenerate-row count together.
    pub fn loss_and_posterior(
        &self,
        data: &Dataset,
    ) -> Result<(LossValue, PosteriorMatrix, u64)> {
        self.check_data(data)?;
        let (n, k) = (data.n(), self.model.k);
        let mut values = vec![0.0; n * k];
        let mut scratch = vec![0.0; k];
        let mut degenerate = 0u64;
        let mut neg_log_sum = 0.0;
        for i in 0..n {
            self.components_into(data.row(i), &mut scratch);
            let mixture = self.mix(&scratch);
            let floored = mixture.max(EPS_FLOOR);
            neg_log_sum -= floored.ln();
            let row = &mut values[i * k..(i + 1) * k];
            let mut row_sum = 0.0;
            for (out, (w, c)) in row
                .iter_mut()
                .zip(self.model.weights.iter().zip(&scratch))
            {
                *out = w * c / floored;
                row_sum += *out;
            }
            if row_sum > 0.0 {
                for v in row.iter_mut() {
                    *v /= row_sum;
                }
            } else {
                degenerate += 1;
                row.fill(1.0 / k as f64);
            }
        }
        let posterior = PosteriorMatrix::new(n, k, values)?;
        Ok((LossValue(neg_log_sum / n as f64), posterior, degenerate))
    }

    /// Empirical score statistic: for each component `k < K`, the average
    /// of `(N psi_k - N psi_K)(x_i) / f(x_i)`. Vanishes at interior
    /// stationary points of the loss in the weights.
    pub fn naive_score(&self, data: &Dataset) -> Result<Vec<f64>> {
        if self.model.k < 2 {
            return Err(Error::ScoreUndefined);
        }
        self.check_data(data)?;
        let k = self.model.k;
        let mut scratch = vec![0.0; k];
        let mut score = vec![0.0; k - 1];
        for i in 0..data.n() {
            self.components_into(data.row(i), &mut scratch);
            let f = self.mix(&scratch).max(EPS_FLOOR);
            let last = scratch[k - 1];
            for (s, c) in score.iter_mut().zip(&scratch[..k - 1]) {
                *s += (c - last) / f;
            }
        }
        for s in &mut score {
            *s /= data.n() as f64;
        }
        Ok(score)
    }

    fn check_data(&self, data: &Dataset) -> Result<()> {
        if data.j() != self.model.j {
            return Err(Error::Invalid(format!(
                "data has {} coordinates, model has {}",
                data.j(),
                self.model.j
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::interpolate_at;

    fn unit_grid(m: usize) -> Grid {
        Grid::new(0.0, 1.0, m).unwrap()
    }

    /// Two-component model on [0, 1] with uniform and triangle densities in
    /// each of two coordinates.
    fn toy_model() -> MixtureModel {
        let g = unit_grid(64);
        let uniform = GridDensity::new_density(g, vec![1.0; 64]).unwrap();
        let tri_up: Vec<f64> = (0..64).map(|i| 2.0 * g.point(i)).collect();
        let tri_down: Vec<f64> = (0..64).map(|i| 2.0 - 2.0 * g.point(i)).collect();
        let up = GridDensity::new_density(g, tri_up).unwrap();
        let down = GridDensity::new_density(g, tri_down).unwrap();
        MixtureModel::new(
            vec![0.4, 0.6],
            vec![
                vec![uniform.clone(), up],
                vec![down, uniform],
            ],
            KernelSpec::gaussian(0.1).unwrap(),
        )
        .unwrap()
    }

    fn toy_data() -> Dataset {
        Dataset::from_rows(&[
            vec![0.1, 0.9],
            vec![0.5, 0.5],
            vec![0.8, 0.2],
            vec![0.3, 0.6],
        ])
        .unwrap()
    }

    #[test]
    fn model_validation_catches_shape_errors() {
        let g = unit_grid(64);
        let u = GridDensity::new_density(g, vec![1.0; 64]).unwrap();
        let kernel = KernelSpec::gaussian(0.1).unwrap();
        // Weights off the simplex.
        assert!(MixtureModel::new(
            vec![0.6, 0.6],
            vec![vec![u.clone()], vec![u.clone()]],
            kernel
        )
        .is_err());
        // Mismatched grids across components in one coordinate.
        let g2 = Grid::new(0.0, 2.0, 64).unwrap();
        let u2 = GridDensity::new_density(g2, vec![0.5; 64]).unwrap();
        assert!(MixtureModel::new(
            vec![0.5, 0.5],
            vec![vec![u.clone()], vec![u2]],
            kernel
        )
        .is_err());
        assert!(MixtureModel::new(vec![0.5, 0.5], vec![vec![u]], kernel).is_err());
    }

    #[test]
    fn component_product_matches_manual_interpolation() {
        let model = toy_model();
        let s = model.smoothed().unwrap();
        let x = [0.37, 0.81];
        for kk in 0..2 {
            let expected = interpolate_at(s.smoothed_density(kk, 0), x[0])
                * interpolate_at(s.smoothed_density(kk, 1), x[1]);
            let got = s.component_at(kk, &x);
            assert!(
                (got - expected).abs() < 1e-14,
                "component {kk}: {got} vs {expected}"
            );
        }
        let mix = s.mixture_at(&x);
        let expected = 0.4 * s.component_at(0, &x) + 0.6 * s.component_at(1, &x);
        assert!((mix - expected).abs() < 1e-14);
    }

    #[test]
    fn mixture_is_floored_outside_the_grid() {
        let model = toy_model();
        let s = model.smoothed().unwrap();
        // Both coordinates far outside [0, 1]: every factor is floored, and
        // the tiny product is lifted back to the floor itself.
        let v = s.mixture_at(&[5.0, -3.0]);
        assert_eq!(v, EPS_FLOOR);
    }

    #[test]
    fn posterior_rows_sum_to_one() {
        let model = toy_model();
        let s = model.smoothed().unwrap();
        let data = toy_data();
        let (post, degenerate) = s.posterior_weights(&data).unwrap();
        assert_eq!(degenerate, 0);
        for i in 0..data.n() {
            let sum: f64 = post.row(i).iter().sum();
            assert!((sum - 1.0).abs() <= SIMPLEX_TOL);
        }
    }

    #[test]
    fn loss_shifts_by_ln2_when_density_doubles() {
        // Doubling every mixture value shifts each log term by ln 2; build
        // the doubled model by doubling the weights' effect via a scaled
        // copy of the smoothed values. Here we exploit linearity by
        // comparing against a model with all densities doubled, which the
        // validating constructor rejects; instead verify on the loss
        // definition directly.
        let model = toy_model();
        let s = model.smoothed().unwrap();
        let data = toy_data();
        let LossValue(loss) = s.empirical_smoothed_loss(&data).unwrap();
        let mut manual = 0.0;
        for i in 0..data.n() {
            manual -= (2.0 * s.mixture_at(data.row(i))).ln();
        }
        manual /= data.n() as f64;
        assert!(
            (manual - (loss - 2f64.ln())).abs() < 1e-12,
            "scaling the density by 2 must shift the loss by -ln 2"
        );
    }

    #[test]
    fn permutation_relabels_posteriors_consistently() {
        let model = toy_model();
        let data = toy_data();
        let s = model.smoothed().unwrap();
        let (post, _) = s.posterior_weights(&data).unwrap();
        let LossValue(loss) = s.empirical_smoothed_loss(&data).unwrap();

        let permuted = model.permuted(&[1, 0]).unwrap();
        let sp = permuted.smoothed().unwrap();
        let (post_p, _) = sp.posterior_weights(&data).unwrap();
        let LossValue(loss_p) = sp.empirical_smoothed_loss(&data).unwrap();

        assert!((loss - loss_p).abs() < 1e-12, "loss is label-invariant");
        for i in 0..data.n() {
            for kk in 0..2 {
                assert!(
                    (post.row(i)[kk] - post_p.row(i)[1 - kk]).abs() < 1e-12,
                    "posterior columns must permute with the labels"
                );
            }
        }
    }

    #[test]
    fn score_is_undefined_for_single_component() {
        let g = unit_grid(64);
        let u = GridDensity::new_density(g, vec![1.0; 64]).unwrap();
        let model = MixtureModel::new(
            vec![1.0],
            vec![vec![u]],
            KernelSpec::gaussian(0.1).unwrap(),
        )
        .unwrap();
        let s = model.smoothed().unwrap();
        assert!(matches!(
            s.naive_score(&Dataset::from_rows(&[vec![0.5]]).unwrap()),
            Err(Error::ScoreUndefined)
        ));
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let model = toy_model();
        let text = model.to_json().unwrap();
        let parsed = MixtureModel::from_json(&text).unwrap();
        assert_eq!(model, parsed, "serialized model must round-trip exactly");
        // And the re-serialization is byte-identical.
        assert_eq!(text, parsed.to_json().unwrap());
    }

    #[test]
    fn posterior_matrix_validation() {
        assert!(PosteriorMatrix::new(2, 2, vec![0.5, 0.5, 0.9, 0.2]).is_err());
        assert!(PosteriorMatrix::new(2, 2, vec![0.5, 0.5, 0.9, 0.1]).is_ok());
        let p = PosteriorMatrix::new(2, 2, vec![1.0, 0.0, 0.5, 0.5]).unwrap();
        let means = p.column_means();
        assert!((means[0] - 0.75).abs() < 1e-15);
        assert!((means[1] - 0.25).abs() < 1e-15);
    }
}
