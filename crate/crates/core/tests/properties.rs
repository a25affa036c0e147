//! Randomized invariants of the model, smoothing, and posterior machinery.

use proptest::prelude::*;

use npmix::{
    Dataset, Grid, GridDensity, KernelSpec, MixtureModel, SmoothOp, EPS_FLOOR,
};

/// Builds a normalized density on `grid` from arbitrary positive values.
fn density_from(grid: Grid, raw: &[f64]) -> GridDensity {
    let mass = npmix::trapezoid(&grid, raw);
    let values: Vec<f64> = raw.iter().map(|v| v / mass).collect();
    GridDensity::new_density(grid, values).expect("normalized density")
}

/// A random model with `k` components and `j` coordinates on fixed grids.
fn model_strategy(k: usize, j: usize) -> impl Strategy<Value = MixtureModel> {
    let m = 48usize;
    let values = prop::collection::vec(0.05f64..1.0, k * j * m);
    let weights = prop::collection::vec(0.1f64..1.0, k);
    (values, weights, 0.2f64..0.8).prop_map(move |(vals, w, h)| {
        let total: f64 = w.iter().sum();
        let weights: Vec<f64> = w.iter().map(|v| v / total).collect();
        let densities: Vec<Vec<GridDensity>> = (0..k)
            .map(|kk| {
                (0..j)
                    .map(|jj| {
                        let grid = Grid::new(-3.0 - jj as f64, 3.0 + jj as f64, m).unwrap();
                        let start = (kk * j + jj) * m;
                        density_from(grid, &vals[start..start + m])
                    })
                    .collect()
            })
            .collect();
        MixtureModel::new(weights, densities, KernelSpec::gaussian(h).unwrap()).unwrap()
    })
}

fn data_strategy(j: usize) -> impl Strategy<Value = Dataset> {
    prop::collection::vec(prop::collection::vec(-4.0f64..4.0, j), 3..24)
        .prop_map(|rows| Dataset::from_rows(&rows).expect("finite rectangular rows"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn posterior_rows_stay_on_the_simplex(
        model in model_strategy(3, 2),
        data in data_strategy(2),
    ) {
        let smoothed = model.smoothed().expect("smoothing");
        let (posterior, _) = smoothed.posterior_weights(&data).expect("posterior");
        for i in 0..data.n() {
            let row = posterior.row(i);
            let sum: f64 = row.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9, "row {i} sums to {sum}");
            prop_assert!(row.iter().all(|&w| (0.0..=1.0 + 1e-12).contains(&w)));
        }
    }

    #[test]
    fn mixture_density_is_invariant_under_relabeling(
        model in model_strategy(3, 2),
        data in data_strategy(2),
    ) {
        let permuted = model.permuted(&[2, 0, 1]).expect("permutation");
        let a = model.smoothed().expect("smoothing");
        let b = permuted.smoothed().expect("smoothing");
        for i in 0..data.n() {
            let fa = a.mixture_at(data.row(i));
            let fb = b.mixture_at(data.row(i));
            prop_assert!(
                (fa - fb).abs() <= 1e-12 * fa.abs().max(1.0),
                "relabeling changed the mixture density: {fa} vs {fb}"
            );
        }
    }

    #[test]
    fn interpolation_stays_within_value_bounds(
        raw in prop::collection::vec(0.05f64..2.0, 32),
        x in -10.0f64..10.0,
    ) {
        let grid = Grid::new(-2.0, 2.0, 32).unwrap();
        let density = GridDensity::new_unnormalized(grid, raw.clone()).unwrap();
        let v = npmix::interpolate_at(&density, x);
        if x < grid.lo || x > grid.hi {
            prop_assert_eq!(v, EPS_FLOOR, "outside the grid the floor applies");
        } else {
            let lo = raw.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(
                (lo - 1e-12..=hi + 1e-12).contains(&v),
                "interpolated {v} escapes [{lo}, {hi}]"
            );
        }
    }

    #[test]
    fn smoothing_never_inflates_mass(
        raw in prop::collection::vec(0.02f64..1.0, 64),
        h in 0.08f64..1.2,
    ) {
        let grid = Grid::new(-2.5, 2.5, 64).unwrap();
        let density = density_from(grid, &raw);
        let op = SmoothOp::new(grid, &KernelSpec::gaussian(h).unwrap()).expect("operator");
        let smoothed = op.apply(&density).expect("smoothing");
        prop_assert!(
            smoothed.integral() <= 1.0 + 1e-3,
            "smoothed mass {} exceeds one",
            smoothed.integral()
        );
    }
}
