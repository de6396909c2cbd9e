//! Run every numerical verification suite: envelope sandwich bounds,
//! Lambert W0 square-root bounds, label rounding, and the domain-shift
//! inequalities with the p>=3 counterexample.
//!
//! ```bash
//! cargo run --release --example verify_lemmas
//! ```

use poisson_coreset::harness::verify::{run_suite, Suite};

fn main() -> poisson_coreset::Result<()> {
    let report = run_suite(Suite::All)?;
    print!("{}", report.render_text());

    let out_dir = std::path::Path::new("target/examples-out");
    std::fs::create_dir_all(out_dir)?;
    let csv = out_dir.join("verify_slacks.csv");
    std::fs::write(&csv, report.to_csv())?;
    println!("worst slacks -> {}", csv.display());

    if !report.all_pass() {
        std::process::exit(1);
    }
    Ok(())
}
