//! Experiment orchestration: the coreset-versus-uniform comparison over
//! a grid of reduced sizes, summary statistics, and file emission.
//!
//! Each (method, size, repetition) cell builds a reduced set, optimizes
//! it over the shifted domain with margin constraints on hull rows, and
//! evaluates the resulting parameters on the full data; solutions with a
//! nonpositive predictor anywhere are recorded as infeasible with an
//! infinite ratio. Summaries report the median ratio per cell group with
//! order-statistic bands at ranks `n/2 ± sqrt(n)`.

pub mod plot;
pub mod verify;

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::conditioning::{conditioned_basis, rho_estimate, sensitivity_scores, ConditioningConfig};
use crate::coreset::{build_coreset, build_uniform, remainder_indices};
use crate::datagen::{generate_circle, generate_f2, Family, SyntheticSpec};
use crate::hull::{
    auto_hull, constraint_margin, eps_kernel, extreme_points_exact, normalize_unit_ball,
    HullBudget, HullResult,
};
use crate::model::{weighted_loss, Dataset, LinkPower, Loss};
use crate::optimizer::{minimize, OptimizerConfig};
use crate::{Error, Result};

/// Reduction method under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Coreset,
    Uniform,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::Coreset => write!(f, "coreset"),
            Method::Uniform => write!(f, "uniform"),
        }
    }
}

/// Hull extraction policy for the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HullChoice {
    #[default]
    Auto,
    Exact,
    Kernel,
}

fn default_methods() -> Vec<Method> {
    vec![Method::Coreset, Method::Uniform]
}

/// Experiment description, loadable from TOML or JSON.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ExperimentConfig {
    /// CSV dataset path; mutually exclusive with `generator`.
    #[serde(default)]
    pub dataset: Option<PathBuf>,
    #[serde(default)]
    pub generator: Option<SyntheticSpec>,
    pub p: u32,
    /// Reduced sizes, strictly ascending.
    pub sizes: Vec<usize>,
    pub repetitions: usize,
    /// Shift margin ε for `D(ε)`; restricted to (0, 1/14] unless
    /// `unsafe_eps` is set.
    pub eps: f64,
    pub seed0: u64,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    /// Carry hull rows in the uniform baseline too.
    #[serde(default)]
    pub with_hull: bool,
    #[serde(default)]
    pub unsafe_eps: bool,
    #[serde(default)]
    pub hull: HullChoice,
    #[serde(default)]
    pub refine_l1: bool,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: ExperimentConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| Error::Parse(format!("config json: {e}")))?
        } else {
            toml::from_str(&text).map_err(|e| Error::Parse(format!("config toml: {e}")))?
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dataset.is_some() == self.generator.is_some() {
            return Err(Error::InvalidInput(
                "config needs exactly one of `dataset` or `generator`".into(),
            ));
        }
        if self.sizes.is_empty() || self.sizes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "sizes must be nonempty and strictly ascending".into(),
            ));
        }
        if self.sizes[0] == 0 {
            return Err(Error::InvalidInput("sizes must be positive".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidInput("repetitions must be >= 1".into()));
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidInput(format!("eps = {} must be positive", self.eps)));
        }
        if !self.unsafe_eps && self.eps > 1.0 / 14.0 {
            return Err(Error::InvalidInput(format!(
                "eps = {} outside (0, 1/14]; pass unsafe_eps to explore beyond the guarantee",
                self.eps
            )));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidInput("methods must be nonempty".into()));
        }
        LinkPower::from_int(self.p)?;
        Ok(())
    }

    pub fn load_dataset(&self) -> Result<Dataset> {
        match (&self.dataset, &self.generator) {
            (Some(path), None) => Dataset::load_csv(path),
            (None, Some(spec)) => match spec.family {
                Family::F2 => {
                    let p = LinkPower::from_int(spec.p)?;
                    Ok(generate_f2(spec.n, spec.d, p, spec.seed)?.0)
                }
                Family::Circle => generate_circle(spec.n, spec.d, spec.seed),
            },
            _ => Err(Error::InvalidInput(
                "config needs exactly one of `dataset` or `generator`".into(),
            )),
        }
    }
}

/// One (method, size, repetition) outcome. `ratio` is `+∞` exactly when
/// the fitted parameters are infeasible for the full data.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub method: Method,
    pub k: usize,
    pub rep: usize,
    pub seed: u64,
    pub feasible: bool,
    pub ratio: f64,
    pub runtime_ms: f64,
    pub k_actual: usize,
}

fn format_ratio(value: f64) -> String {
    if value.is_finite() {
        format!("{value}")
    } else {
        "inf".to_string()
    }
}

/// Records CSV with columns `method,k,rep,seed,feasible,ratio,runtime_ms,k_actual`.
pub fn records_to_csv(records: &[ExperimentRecord]) -> String {
    let mut out = String::from("method,k,rep,seed,feasible,ratio,runtime_ms,k_actual\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{:.3},{}\n",
            r.method,
            r.k,
            r.rep,
            r.seed,
            r.feasible,
            format_ratio(r.ratio),
            r.runtime_ms,
            r.k_actual
        ));
    }
    out
}

/// Per-(method, k) aggregate: median ratio with order-statistic bands and
/// the exact feasible fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub k: usize,
    pub median: f64,
    pub lo: f64,
    pub hi: f64,
    pub feasible_frac: f64,
}

/// Summary CSV with columns `method,k,median,lo,hi,feasible_frac`.
pub fn summary_to_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("method,k,median,lo,hi,feasible_frac\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.method,
            r.k,
            format_ratio(r.median),
            format_ratio(r.lo),
            format_ratio(r.hi),
            r.feasible_frac
        ));
    }
    out
}

fn order_statistics(sorted: &[f64]) -> (f64, f64, f64) {
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        let a = sorted[n / 2 - 1];
        let b = sorted[n / 2];
        if a.is_finite() && b.is_finite() {
            0.5 * (a + b)
        } else {
            f64::INFINITY
        }
    };
    // Band endpoints at 1-indexed ranks n/2 -/+ sqrt(n), clamped.
    let half = n as f64 / 2.0;
    let spread = (n as f64).sqrt();
    let lo_rank = ((half - spread).floor() as i64).max(1) as usize;
    let hi_rank = ((half + spread).ceil() as usize).min(n);
    (median, sorted[lo_rank - 1], sorted[hi_rank - 1])
}

/// Aggregate records per (method, k). Infeasible repetitions enter the
/// order statistics as `+∞`.
pub fn summarize(records: &[ExperimentRecord]) -> Vec<SummaryRow> {
    summarize_filtered(records, false)
}

/// Aggregate over feasible repetitions only (the shaded-below-the-line
/// convention); groups with no feasible repetition are omitted.
pub fn summarize_feasible_only(records: &[ExperimentRecord]) -> Vec<SummaryRow> {
    summarize_filtered(records, true)
}

fn summarize_filtered(records: &[ExperimentRecord], feasible_only: bool) -> Vec<SummaryRow> {
    let mut groups: std::collections::BTreeMap<(Method, usize), (Vec<f64>, usize)> =
        std::collections::BTreeMap::new();
    for r in records {
        let entry = groups.entry((r.method, r.k)).or_default();
        entry.1 += 1;
        if !feasible_only || r.feasible {
            entry.0.push(r.ratio);
        }
    }
    let mut rows = Vec::new();
    for ((method, k), (mut ratios, total)) in groups {
        if ratios.is_empty() {
            continue;
        }
        ratios.sort_by(f64::total_cmp);
        let (median, lo, hi) = order_statistics(&ratios);
        let feasible = ratios.iter().filter(|v| v.is_finite()).count();
        let denom = if feasible_only { total } else { ratios.len() };
        rows.push(SummaryRow {
            method,
            k,
            median,
            lo,
            hi,
            feasible_frac: feasible as f64 / denom as f64,
        });
    }
    rows
}

/// Everything `run_experiment` produces, with the file paths written.
#[derive(Debug)]
pub struct ExperimentOutput {
    pub records: Vec<ExperimentRecord>,
    pub summary: Vec<SummaryRow>,
    pub summary_feasible: Vec<SummaryRow>,
    pub rho_hat: f64,
    pub reference_objective: f64,
    pub hull: HullResult,
    pub records_path: PathBuf,
    pub summary_path: PathBuf,
}

/// Run the full comparison and write `records.csv`, `summary.csv`,
/// `summary_feasible.csv`, `metadata.json`, and `plot.svg` into
/// `out_dir`.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentOutput> {
    config.validate()?;
    let p = LinkPower::from_int(config.p)?;
    let raw = config.load_dataset()?;
    std::fs::create_dir_all(out_dir)?;

    let (data, scale_factor) = normalize_unit_ball(&raw);
    let budget = HullBudget::default();
    let mut hull = match config.hull {
        HullChoice::Auto => auto_hull(&data, config.eps, &budget)?,
        HullChoice::Exact => extreme_points_exact(&data, &budget)?,
        HullChoice::Kernel => eps_kernel(&data, config.eps)?,
    };
    hull.scale_factor = scale_factor;
    let margin = constraint_margin(&hull, config.eps);

    // Full-data reference optimum at a vanishing margin: the ratio
    // denominator standing in for the unshifted optimum.
    let reference = minimize(
        data.design(),
        data.labels(),
        None,
        p,
        &OptimizerConfig::with_eta(1e-9),
        &hull.indices,
    )?;
    if !reference.converged {
        return Err(Error::InvalidInput(format!(
            "reference optimization did not converge; objective {}, {} newton iterations",
            reference.objective, reference.newton_iterations
        )));
    }
    let f_star = reference.objective;

    let remainder = remainder_indices(data.n(), &hull);
    let (rows_rem, _) = data.select_rows(&remainder);
    let cond_cfg = ConditioningConfig {
        refine_l1: config.refine_l1,
        seed: config.seed0,
        ..Default::default()
    };
    let basis = conditioned_basis(&rows_rem, p, &cond_cfg)?;
    let scores = sensitivity_scores(&basis);
    let rho_hat = rho_estimate(&data, p, 20, config.seed0)?;

    let mut cells = Vec::new();
    for &method in &config.methods {
        for &k in &config.sizes {
            for rep in 0..config.repetitions {
                cells.push((method, k, rep));
            }
        }
    }

    let opt_config = OptimizerConfig::with_eta(margin);
    let records: Vec<ExperimentRecord> = cells
        .par_iter()
        .map(|&(method, k, rep)| {
            let seed = config.seed0 + 1_000_003 * rep as u64;
            let start = Instant::now();
            let reduced = match method {
                Method::Coreset => build_coreset(&data, k, seed, &hull, &scores),
                Method::Uniform => build_uniform(&data, k, seed, &hull, config.with_hull),
            }
            .expect("reduction cannot fail once scores are aligned");
            let hull_rows = reduced.hull_indices();
            let (feasible, ratio) = match minimize(
                &reduced.rows,
                &reduced.labels,
                Some(&reduced.weights),
                p,
                &opt_config,
                &hull_rows,
            ) {
                Ok(fit) => {
                    match weighted_loss(data.design(), data.labels(), None, &fit.beta, p) {
                        Ok(Loss::Finite(full)) => (true, full / f_star),
                        _ => (false, f64::INFINITY),
                    }
                }
                Err(_) => (false, f64::INFINITY),
            };
            ExperimentRecord {
                method,
                k,
                rep,
                seed,
                feasible,
                ratio,
                runtime_ms: start.elapsed().as_secs_f64() * 1e3,
                k_actual: reduced.len(),
            }
        })
        .collect();

    let summary = summarize(&records);
    let summary_feasible = summarize_feasible_only(&records);

    let records_path = out_dir.join("records.csv");
    std::fs::write(&records_path, records_to_csv(&records))?;
    let summary_path = out_dir.join("summary.csv");
    std::fs::write(&summary_path, summary_to_csv(&summary))?;
    std::fs::write(
        out_dir.join("summary_feasible.csv"),
        summary_to_csv(&summary_feasible),
    )?;
    std::fs::write(out_dir.join("hull_indices.csv"), hull.indices_csv())?;
    std::fs::write(out_dir.join("plot.svg"), plot::emit_plot(&summary, &records))?;
    let metadata = serde_json::json!({
        "config": config,
        "n": data.n(),
        "d": data.d(),
        "scale_factor": scale_factor,
        "hull_mode": hull.mode,
        "hull_count": hull.indices.len(),
        "margin": margin,
        "rho_hat": rho_hat,
        "reference_objective": f_star,
    });
    std::fs::write(
        out_dir.join("metadata.json"),
        serde_json::to_string_pretty(&metadata)
            .map_err(|e| Error::Parse(format!("metadata serialization: {e}")))?,
    )?;

    Ok(ExperimentOutput {
        records,
        summary,
        summary_feasible,
        rho_hat,
        reference_objective: f_star,
        hull,
        records_path,
        summary_path,
    })
}
