//! Compare the exact extreme-point computation against ε-kernels on the
//! circle instance, where every row is an extreme point.
//!
//! ```bash
//! cargo run --example hull_kernel
//! ```

use poisson_coreset::datagen::generate_circle;
use poisson_coreset::hull::{eps_kernel, extreme_points_exact, HullBudget};

fn main() -> poisson_coreset::Result<()> {
    let data = generate_circle(128, 3, 0)?;
    let exact = extreme_points_exact(&data, &HullBudget::default())?;
    println!(
        "circle n=128: exact hull keeps {} of {} rows",
        exact.indices.len(),
        data.n()
    );

    println!("{:>8} {:>12} {:>22}", "eps", "kernel size", "worst extent gap");
    for eps in [0.4, 0.2, 0.1, 0.05, 0.02, 0.01] {
        let kernel = eps_kernel(&data, eps)?;
        // Worst directional extent gap over a dense probe of directions.
        let mut worst_gap = 0.0f64;
        for j in 0..720 {
            let angle = 2.0 * std::f64::consts::PI * j as f64 / 720.0;
            let (ux, uy) = (angle.cos(), angle.sin());
            let extent = |rows: &[usize]| {
                rows.iter()
                    .map(|&i| ux * data.design()[(i, 1)] + uy * data.design()[(i, 2)])
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            let all: Vec<usize> = (0..data.n()).collect();
            worst_gap = worst_gap.max(extent(&all) - extent(&kernel.indices));
        }
        println!(
            "{eps:>8} {:>12} {worst_gap:>22.6} (2*eps = {:.3})",
            kernel.indices.len(),
            2.0 * eps
        );
        assert!(kernel.indices.iter().all(|i| exact.indices.contains(i)));
    }
    println!("every kernel row is a true extreme point");
    Ok(())
}
