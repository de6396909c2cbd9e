//! Generate the two synthetic instance families and write them as CSV
//! with sidecar JSON metadata.
//!
//! ```bash
//! cargo run --example generate_data
//! ```

use poisson_coreset::datagen::{generate_circle, generate_f2, write_sidecar, Family, SyntheticSpec};
use poisson_coreset::model::LinkPower;

fn main() -> poisson_coreset::Result<()> {
    let out_dir = std::path::Path::new("target/examples-out");
    std::fs::create_dir_all(out_dir)?;

    // Simplex benchmark: hull vertices plus near-boundary interior rows,
    // Poisson labels from a planted parameter.
    let spec = SyntheticSpec {
        family: Family::F2,
        n: 2_000,
        d: 7,
        p: 1,
        seed: 42,
    };
    let (data, beta) = generate_f2(spec.n, spec.d, LinkPower::Id, spec.seed)?;
    let csv = out_dir.join("simplex.csv");
    data.save_csv(&csv)?;
    write_sidecar(&csv.with_extension("json"), &spec, Some(&beta))?;
    let rates = data.predictor(&beta);
    println!(
        "simplex: {} rows, d = {}, y_max = {}, planted margin = {:.4}",
        data.n(),
        data.d(),
        data.y_max(),
        rates.iter().copied().fold(f64::INFINITY, f64::min)
    );
    println!("  -> {}", csv.display());

    // Circle hard instance: every row is an extreme point.
    let circle_spec = SyntheticSpec {
        family: Family::Circle,
        n: 64,
        d: 3,
        p: 1,
        seed: 0,
    };
    let circle = generate_circle(circle_spec.n, circle_spec.d, circle_spec.seed)?;
    let circle_csv = out_dir.join("circle.csv");
    circle.save_csv(&circle_csv)?;
    write_sidecar(&circle_csv.with_extension("json"), &circle_spec, None)?;
    println!("circle: {} rows, all labels 1", circle.n());
    println!("  -> {}", circle_csv.display());
    Ok(())
}
