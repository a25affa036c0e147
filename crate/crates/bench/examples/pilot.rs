//! Small pilot benchmark for eyeballing error levels before a full run.
//!
//! Usage: `cargo run --release -p npmix-bench --example pilot [reps]`

use npmix_bench::{render_tables, run_bench, summary_csv, BenchConfig};
use npmix::Family;

fn main() {
    let reps: usize = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(30);
    let config = BenchConfig {
        families: vec![Family::Gaussian, Family::StudentT3, Family::Laplace],
        replications: reps,
        seed: 20260813,
        ..BenchConfig::default()
    };
    let report = run_bench(&config).unwrap();
    print!("{}", render_tables(&report));
    print!("{}", summary_csv(&report));
}
