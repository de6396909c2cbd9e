//! Full desk-scale comparison: n = 20000, d = 7, sizes 50..600, 51
//! repetitions per cell. The uniform baseline's median turns infinite at
//! small sizes (a majority of repetitions lands infeasible on the full
//! data) while the hull-carrying coreset stays feasible throughout.
//!
//! ```bash
//! cargo run --release --example desk_scale_experiment -- 1   # ID-link
//! cargo run --release --example desk_scale_experiment -- 2   # sqrt-link
//! ```

use std::time::Instant;

use poisson_coreset::datagen::{Family, SyntheticSpec};
use poisson_coreset::harness::{run_experiment, ExperimentConfig, HullChoice, Method};

fn main() -> poisson_coreset::Result<()> {
    let p: u32 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1);
    let start = Instant::now();
    let config = ExperimentConfig {
        dataset: None,
        generator: Some(SyntheticSpec {
            family: Family::F2,
            n: 20_000,
            d: 7,
            p,
            seed: 2024,
        }),
        p,
        sizes: (1..=12).map(|i| i * 50).collect(),
        repetitions: 51,
        eps: 0.05,
        seed0: 1,
        methods: vec![Method::Coreset, Method::Uniform],
        with_hull: false,
        unsafe_eps: false,
        hull: HullChoice::Auto,
        refine_l1: false,
    };
    let out_dir = std::path::PathBuf::from(format!("target/examples-out/desk-scale-p{p}"));
    let output = run_experiment(&config, &out_dir)?;
    println!(
        "p={p}: {:.1}s, reference objective {:.1}, rho lower bound {:.3}, hull {} rows",
        start.elapsed().as_secs_f64(),
        output.reference_objective,
        output.rho_hat,
        output.hull.indices.len()
    );
    let fmt = |v: f64| {
        if v.is_finite() {
            format!("{v:.6}")
        } else {
            "inf".into()
        }
    };
    println!(
        "{:>8} {:>5} {:>12} {:>12} {:>12} {:>9}",
        "method", "k", "median", "lo", "hi", "feasible"
    );
    for row in &output.summary {
        println!(
            "{:>8} {:>5} {:>12} {:>12} {:>12} {:>9.3}",
            row.method.to_string(),
            row.k,
            fmt(row.median),
            fmt(row.lo),
            fmt(row.hi),
            row.feasible_frac
        );
    }
    println!("artifacts -> {}", out_dir.display());
    Ok(())
}
