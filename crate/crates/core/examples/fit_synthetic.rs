//! Fits a synthetic three-coordinate location mixture and prints a short
//! summary; handy for eyeballing solver behavior and timing.
//!
//! Usage: `cargo run --release --example fit_synthetic [n] [seed]`

use std::time::Instant;

use npmix::{fit, sample, solver::InitMethod, Family, FitConfig, SyntheticSpec};

fn main() {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(1600);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(7);

    let spec = SyntheticSpec::new(Family::Gaussian, 3).unwrap();
    let labeled = sample(&spec, n, seed).unwrap();
    let config = FitConfig {
        k: 2,
        seed,
        init: InitMethod::KMeansLike,
        ..FitConfig::default()
    };

    let start = Instant::now();
    let result = fit(&labeled.data, &config).unwrap();
    let elapsed = start.elapsed();

    let loss = result.loss_trajectory.last().unwrap().0;
    println!(
        "n={n} seed={seed}: pi = {:?}, loss = {loss:.6}, iterations = {}, converged = {}, {:.3}s",
        result.model.weights(),
        result.iterations,
        result.converged,
        elapsed.as_secs_f64()
    );
}
