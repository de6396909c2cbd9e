//! Shifted-domain optimization: the full-data optimum near D(0), the
//! optimum over D(eps), and the coreset route, compared on the full loss.
//!
//! ```bash
//! cargo run --release --example optimize_shifted
//! ```

use poisson_coreset::conditioning::{conditioned_basis, sensitivity_scores, ConditioningConfig};
use poisson_coreset::coreset::{build_coreset, remainder_indices};
use poisson_coreset::datagen::generate_f2;
use poisson_coreset::hull::{auto_hull, constraint_margin, normalize_unit_ball, HullBudget};
use poisson_coreset::model::{weighted_loss, LinkPower};
use poisson_coreset::optimizer::{minimize, OptimizerConfig};

fn main() -> poisson_coreset::Result<()> {
    let p = LinkPower::Sqrt;
    let eps = 0.05;
    let (raw, _) = generate_f2(4_000, 5, p, 11)?;
    let (data, _) = normalize_unit_ball(&raw);
    let hull = auto_hull(&data, eps, &HullBudget::default())?;
    let margin = constraint_margin(&hull, eps);

    // Reference optimum with a vanishing hull margin (proxy for D(0)).
    let reference = minimize(
        data.design(),
        data.labels(),
        None,
        p,
        &OptimizerConfig::with_eta(1e-9),
        &hull.indices,
    )?;
    println!(
        "full data near D(0):  objective {:.4} (converged: {})",
        reference.objective, reference.converged
    );

    // Full data over the shifted domain.
    let shifted = minimize(
        data.design(),
        data.labels(),
        None,
        p,
        &OptimizerConfig::with_eta(margin),
        &hull.indices,
    )?;
    println!(
        "full data over D({margin}): objective {:.4}, ratio {:.6}",
        shifted.objective,
        shifted.objective / reference.objective
    );

    // Coreset route: optimize the reduced weighted problem, evaluate the
    // resulting parameters on the full data.
    let remainder = remainder_indices(data.n(), &hull);
    let (rows, _) = data.select_rows(&remainder);
    let basis = conditioned_basis(&rows, p, &ConditioningConfig::default())?;
    let scores = sensitivity_scores(&basis);
    for k in [100, 400, 1600] {
        let coreset = build_coreset(&data, k, 5, &hull, &scores)?;
        let fit = minimize(
            &coreset.rows,
            &coreset.labels,
            Some(&coreset.weights),
            p,
            &OptimizerConfig::with_eta(margin),
            &coreset.hull_indices(),
        )?;
        let full = weighted_loss(data.design(), data.labels(), None, &fit.beta, p)?
            .value()
            .expect("hull-carrying coreset keeps the fit feasible");
        println!(
            "coreset k={k:5}:       full-data ratio {:.6} ({} rows optimized)",
            full / reference.objective,
            coreset.len()
        );
    }
    Ok(())
}
