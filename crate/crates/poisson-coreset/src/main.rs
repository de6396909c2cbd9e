//! Thin command-line front end over the library; every subcommand maps
//! onto one pipeline capability.

// `!(x > 0.0)` deliberately treats NaN as invalid input.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use poisson_coreset::conditioning::{conditioned_basis, sensitivity_scores, ConditioningConfig};
use poisson_coreset::coreset::{build_coreset, remainder_indices};
use poisson_coreset::datagen::{
    circle_sensitivity_demo, generate_circle, generate_f2, write_sidecar, Family, SyntheticSpec,
};
use poisson_coreset::harness::verify::{run_suite, Suite};
use poisson_coreset::harness::{run_experiment, ExperimentConfig, HullChoice};
use poisson_coreset::hull::{
    auto_hull, constraint_margin, eps_kernel, extreme_points_exact, normalize_unit_ball, HullBudget,
};
use poisson_coreset::model::{Dataset, LinkPower};
use poisson_coreset::optimizer::{minimize, FullDataCheck, OptimizerConfig};

#[derive(Parser)]
#[command(
    name = "poisson-coreset",
    about = "Coreset construction and shifted-domain optimization for Poisson regression",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset CSV plus a sidecar JSON.
    Generate {
        /// Instance family: f2 | circle.
        #[arg(long)]
        family: Family,
        #[arg(long)]
        n: usize,
        /// Total columns including the intercept.
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 1)]
        p: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a sensitivity-sampling coreset from a dataset CSV.
    Coreset {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        p: u32,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Kernel parameter when the exact hull is over budget.
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
        #[arg(long, value_enum, default_value_t = HullArg::Auto)]
        hull: HullArg,
        /// Heavier iterative reweighting for the p=1 basis.
        #[arg(long)]
        refine_l1: bool,
        /// Optional sensitivity-score CSV for audit.
        #[arg(long)]
        scores_out: Option<PathBuf>,
    },
    /// Optimize the full dataset over the shifted domain D(eps).
    Optimize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        p: u32,
        #[arg(long)]
        eps: f64,
        /// Output JSON-lines file for the fit record.
        #[arg(long)]
        out: PathBuf,
        /// Allow eps beyond the guarantee range (0, 1/14].
        #[arg(long)]
        unsafe_eps: bool,
    },
    /// Run the coreset-vs-uniform experiment described by a config file.
    Experiment {
        /// TOML or JSON experiment config.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run the numerical verification suites.
    Verify {
        /// envelopes | lambert | rounding | shift | all
        #[arg(long, default_value = "all")]
        suite: String,
        /// Optional CSV of worst slacks.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Circle hard-instance sensitivity lower bound in log-space.
    LowerboundDemo {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        log_eta: f64,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum HullArg {
    Auto,
    Exact,
    Kernel,
}

impl From<HullArg> for HullChoice {
    fn from(value: HullArg) -> Self {
        match value {
            HullArg::Auto => HullChoice::Auto,
            HullArg::Exact => HullChoice::Exact,
            HullArg::Kernel => HullChoice::Kernel,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> poisson_coreset::Result<ExitCode> {
    match cli.command {
        Command::Generate {
            family,
            n,
            d,
            p,
            seed,
            out,
        } => {
            let spec = SyntheticSpec {
                family,
                n,
                d,
                p,
                seed,
            };
            let (data, true_beta) = match family {
                Family::F2 => {
                    let link = LinkPower::from_int(p)?;
                    let (data, beta) = generate_f2(n, d, link, seed)?;
                    (data, Some(beta))
                }
                Family::Circle => (generate_circle(n, d, seed)?, None),
            };
            data.save_csv(&out)?;
            let sidecar = out.with_extension("json");
            write_sidecar(&sidecar, &spec, true_beta.as_ref())?;
            println!(
                "wrote {} ({} rows, {} columns) and {}",
                out.display(),
                data.n(),
                data.d(),
                sidecar.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Coreset {
            input,
            p,
            k,
            seed,
            out,
            eps,
            hull,
            refine_l1,
            scores_out,
        } => {
            let link = LinkPower::from_int(p)?;
            let raw = Dataset::load_csv(&input)?;
            let (data, scale_factor) = normalize_unit_ball(&raw);
            let budget = HullBudget::default();
            let mut hull = match HullChoice::from(hull) {
                HullChoice::Auto => auto_hull(&data, eps, &budget)?,
                HullChoice::Exact => extreme_points_exact(&data, &budget)?,
                HullChoice::Kernel => eps_kernel(&data, eps)?,
            };
            hull.scale_factor = scale_factor;
            let remainder = remainder_indices(data.n(), &hull);
            let (rows, _) = data.select_rows(&remainder);
            let cfg = ConditioningConfig {
                refine_l1,
                seed,
                ..Default::default()
            };
            let basis = conditioned_basis(&rows, link, &cfg)?;
            let scores = sensitivity_scores(&basis);
            // The coreset stores unnormalized covariates so it can be
            // consumed like any dataset CSV.
            let coreset = build_coreset(&raw, k, seed, &hull, &scores)?;
            coreset.save_csv(&out)?;
            if let Some(path) = scores_out {
                std::fs::write(&path, scores.to_csv())?;
            }
            println!(
                "wrote {} ({} hull rows + {} samples; alpha={:.3}, gamma={:.3}, total sensitivity={:.3})",
                out.display(),
                coreset.hull_count,
                k,
                basis.alpha,
                basis.gamma,
                scores.total
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Optimize {
            input,
            p,
            eps,
            out,
            unsafe_eps,
        } => {
            if !(eps > 0.0) {
                return Err(poisson_coreset::Error::InvalidInput(
                    "eps must be positive".into(),
                ));
            }
            if !unsafe_eps && eps > 1.0 / 14.0 {
                return Err(poisson_coreset::Error::InvalidInput(format!(
                    "eps = {eps} outside (0, 1/14]; pass --unsafe-eps to explore beyond the guarantee"
                )));
            }
            let link = LinkPower::from_int(p)?;
            let raw = Dataset::load_csv(&input)?;
            let (data, _) = normalize_unit_ball(&raw);
            let hull = auto_hull(&data, eps, &HullBudget::default())?;
            let margin = constraint_margin(&hull, eps);
            let mut fit = minimize(
                data.design(),
                data.labels(),
                None,
                link,
                &OptimizerConfig::with_eta(margin),
                &hull.indices,
            )?;
            let (feasible, full_margin) = data.membership_d(&fit.beta, 0.0);
            fit.feasible_full_data = Some(FullDataCheck {
                feasible,
                margin: full_margin,
            });
            std::fs::write(&out, format!("{}\n", fit.to_json_line()))?;
            println!(
                "objective {:.6} (converged: {}, margin over hull: {margin}); wrote {}",
                fit.objective,
                fit.converged,
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Experiment { config, out_dir } => {
            let config = ExperimentConfig::load(&config)?;
            let output = run_experiment(&config, &out_dir)?;
            println!(
                "{} records -> {} (reference objective {:.3}, rho lower bound {:.3})",
                output.records.len(),
                output.records_path.display(),
                output.reference_objective,
                output.rho_hat
            );
            for row in &output.summary {
                println!(
                    "{:8} k={:5} median={:>10} feasible={:.3}",
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
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { suite, csv } => {
            let suite: Suite = suite.parse()?;
            let report = run_suite(suite)?;
            print!("{}", report.render_text());
            if let Some(path) = csv {
                std::fs::write(&path, report.to_csv())?;
                println!("wrote {}", path.display());
            }
            Ok(if report.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::LowerboundDemo { n, log_eta } => {
            let demo = circle_sensitivity_demo(n, log_eta)?;
            println!(
                "n={} log_eta={} closed_form_bound={:.12} summed_ratio={:.12}",
                demo.n, demo.log_eta, demo.closed_form_bound, demo.summed_ratio
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}
