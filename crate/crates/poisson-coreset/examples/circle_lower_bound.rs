//! Sensitivity lower bound on the circle hard instance, evaluated in
//! log-space at margins as deep as exp(-n^2).
//!
//! The bound n^2/(n^2 + 8 n ln n) approaches 1, showing that every point
//! of the instance matters and no sublinear coreset can exist for it.
//!
//! ```bash
//! cargo run --example circle_lower_bound
//! ```

use poisson_coreset::datagen::circle_sensitivity_demo;

fn main() -> poisson_coreset::Result<()> {
    println!(
        "{:>6} {:>10} {:>22} {:>22}",
        "n", "log_eta", "closed-form bound", "summed-denominator"
    );
    for n in [8usize, 16, 32, 64, 128, 256] {
        let log_eta = -((n * n) as f64);
        let demo = circle_sensitivity_demo(n, log_eta)?;
        println!(
            "{n:>6} {log_eta:>10} {:>22.12} {:>22.12}",
            demo.closed_form_bound, demo.summed_ratio
        );
    }
    println!("\nfixed n = 16, deepening margin:");
    for log_eta in [-16.0, -64.0, -256.0, -1024.0] {
        let demo = circle_sensitivity_demo(16, log_eta)?;
        println!(
            "  log_eta {log_eta:>8}: bound {:.12}",
            demo.closed_form_bound
        );
    }
    Ok(())
}
