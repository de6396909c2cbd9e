//! End-to-end coreset construction: normalize, extract the hull, build
//! the conditioned basis, score sensitivities, and sample.
//!
//! ```bash
//! cargo run --release --example build_coreset
//! ```

use poisson_coreset::conditioning::{
    conditioned_basis, rho_estimate, sensitivity_scores, theoretical_coreset_size,
    ConditioningConfig,
};
use poisson_coreset::coreset::{build_coreset, remainder_indices};
use poisson_coreset::datagen::generate_f2;
use poisson_coreset::hull::{auto_hull, normalize_unit_ball, HullBudget};
use poisson_coreset::model::LinkPower;

fn main() -> poisson_coreset::Result<()> {
    let p = LinkPower::Id;
    let (raw, _) = generate_f2(5_000, 5, p, 7)?;
    let (data, c) = normalize_unit_ball(&raw);
    println!("instance: n = {}, d = {}, normalization c = {c:.4}", data.n(), data.d());

    let hull = auto_hull(&data, 0.05, &HullBudget::default())?;
    println!("hull: {} rows kept at weight 1 ({:?} mode)", hull.indices.len(), hull.mode);

    let remainder = remainder_indices(data.n(), &hull);
    let (rows, _) = data.select_rows(&remainder);
    let basis = conditioned_basis(&rows, p, &ConditioningConfig::default())?;
    let scores = sensitivity_scores(&basis);
    println!(
        "basis: alpha = {:.3}, measured gamma = {:.3}; total sensitivity = {:.3}",
        basis.alpha, basis.gamma, scores.total
    );

    let rho = rho_estimate(&data, p, 20, 1)?;
    let k_theory = theoretical_coreset_size(0.1, 0.1, rho, data.y_max(), data.d(), data.n(), p);
    println!("rho lower-bound estimate: {rho:.3}; sampling-theorem size (informational): {k_theory:.0}");

    let k = 500;
    let coreset = build_coreset(&data, k, 99, &hull, &scores)?;
    println!(
        "coreset: {} rows = {} hull + {} sampled; weight range [{:.3}, {:.3}]",
        coreset.len(),
        coreset.hull_count,
        k,
        coreset.weights[coreset.hull_count..]
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b)),
        coreset.weights[coreset.hull_count..]
            .iter()
            .fold(0.0f64, |a, &b| a.max(b)),
    );

    let out_dir = std::path::Path::new("target/examples-out");
    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join("coreset.csv");
    coreset.save_csv(&path)?;
    println!("  -> {}", path.display());
    Ok(())
}
