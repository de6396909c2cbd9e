//! Desk-scale coreset-versus-uniform comparison with CSV and SVG output.
//!
//! ```bash
//! cargo run --release --example run_experiment
//! ```

use poisson_coreset::datagen::{Family, SyntheticSpec};
use poisson_coreset::harness::{run_experiment, ExperimentConfig, HullChoice, Method};

fn main() -> poisson_coreset::Result<()> {
    let config = ExperimentConfig {
        dataset: None,
        generator: Some(SyntheticSpec {
            family: Family::F2,
            n: 5_000,
            d: 7,
            p: 1,
            seed: 2024,
        }),
        p: 1,
        sizes: (1..=8).map(|i| i * 50).collect(),
        repetitions: 21,
        eps: 0.05,
        seed0: 1,
        methods: vec![Method::Coreset, Method::Uniform],
        with_hull: false,
        unsafe_eps: false,
        hull: HullChoice::Auto,
        refine_l1: false,
    };

    let out_dir = std::path::Path::new("target/examples-out/experiment");
    let output = run_experiment(&config, out_dir)?;

    println!(
        "reference objective {:.3}, rho lower bound {:.3}, hull {} rows",
        output.reference_objective,
        output.rho_hat,
        output.hull.indices.len()
    );
    println!("{:>8} {:>6} {:>12} {:>10}", "method", "k", "median", "feasible");
    for row in &output.summary {
        println!(
            "{:>8} {:>6} {:>12} {:>10.3}",
            row.method.to_string(),
            row.k,
            if row.median.is_finite() {
                format!("{:.6}", row.median)
            } else {
                "inf".into()
            },
            row.feasible_frac
        );
    }
    println!("records, summaries, and plot.svg -> {}", out_dir.display());
    Ok(())
}
