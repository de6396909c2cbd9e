//! Verification suites: every closed-form inequality the pipeline relies
//! on, checked numerically on dense grids, with worst slacks exported as
//! CSV (`check,y,p,param,worst_slack`).

use crate::datagen::generate_f2;
use crate::envelopes::{
    counterexample_p_geq_3, cost_lower_bound, envelope_sandwich_check, lambda_star,
    lambert_bounds_check, log_grid, rounding_check,
};
use crate::model::{point_loss_unchecked, LinkPower};
use crate::optimizer::shift_gap_check;
use crate::{Error, Result};

/// Which checks to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Envelopes,
    Lambert,
    Rounding,
    Shift,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "envelopes" => Ok(Suite::Envelopes),
            "lambert" => Ok(Suite::Lambert),
            "rounding" => Ok(Suite::Rounding),
            "shift" => Ok(Suite::Shift),
            "all" => Ok(Suite::All),
            other => Err(Error::Parse(format!(
                "unknown suite '{other}' (expected envelopes|lambert|rounding|shift|all)"
            ))),
        }
    }
}

/// One verified inequality with its worst observed slack (negative slack
/// would mean a violation beyond tolerance).
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub check: String,
    /// Count parameter the worst slack occurred at; 0 when not applicable.
    pub y: u64,
    /// Link power; 0 when not applicable.
    pub p: u32,
    pub param: String,
    pub worst_slack: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub outcomes: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.outcomes.iter().all(|o| o.pass)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,y,p,param,worst_slack\n");
        for o in &self.outcomes {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                o.check, o.y, o.p, o.param, o.worst_slack
            ));
        }
        out
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for o in &self.outcomes {
            out.push_str(&format!(
                "[{}] {:<28} y={:<8} p={} {} worst_slack={:.3e}\n",
                if o.pass { "PASS" } else { "FAIL" },
                o.check,
                o.y,
                o.p,
                o.param,
                o.worst_slack
            ));
        }
        let (passed, total) = (
            self.outcomes.iter().filter(|o| o.pass).count(),
            self.outcomes.len(),
        );
        out.push_str(&format!("{passed}/{total} checks passed\n"));
        out
    }
}

/// Integer count grid, log-spaced over `[1, 10^6]`, deduplicated.
pub fn count_grid(points: usize) -> Vec<u64> {
    let mut ys: Vec<u64> = (0..points)
        .map(|k| 10f64.powf(6.0 * k as f64 / (points - 1) as f64).round() as u64)
        .collect();
    ys.dedup();
    ys
}

pub fn run_suite(suite: Suite) -> Result<VerifyReport> {
    let mut report = VerifyReport::default();
    match suite {
        Suite::Envelopes => envelopes_suite(&mut report)?,
        Suite::Lambert => lambert_suite(&mut report)?,
        Suite::Rounding => rounding_suite(&mut report)?,
        Suite::Shift => shift_suite(&mut report)?,
        Suite::All => {
            envelopes_suite(&mut report)?;
            lambert_suite(&mut report)?;
            rounding_suite(&mut report)?;
            shift_suite(&mut report)?;
        }
    }
    Ok(report)
}

fn envelopes_suite(report: &mut VerifyReport) -> Result<()> {
    for &p in &[LinkPower::Id, LinkPower::Sqrt] {
        let mut worst_lower = (f64::INFINITY, 0u64, 1.0);
        let mut worst_upper = (f64::INFINITY, 0u64, 1.0);
        for &y in &count_grid(60) {
            let tau = p.root(y as f64);
            let grid: Vec<f64> = (1..=512)
                .map(|j| tau * 100f64.powf(j as f64 / 512.0))
                .collect();
            let r = envelope_sandwich_check(y, p, &grid, 1e-9)?;
            if r.worst_lower_slack < worst_lower.0 {
                worst_lower = (r.worst_lower_slack, y, r.lambda);
            }
            if r.worst_upper_slack < worst_upper.0 {
                worst_upper = (r.worst_upper_slack, y, r.lambda);
            }
        }
        report.outcomes.push(CheckOutcome {
            check: "sandwich_lower".into(),
            y: worst_lower.1,
            p: p.p_int(),
            param: format!("lambda={:.6}", worst_lower.2),
            worst_slack: worst_lower.0,
            pass: worst_lower.0 >= -1e-9,
        });
        report.outcomes.push(CheckOutcome {
            check: "sandwich_upper".into(),
            y: worst_upper.1,
            p: p.p_int(),
            param: format!("lambda={:.6}", worst_upper.2),
            worst_slack: worst_upper.0,
            pass: worst_upper.0 >= -1e-9,
        });

        // Cost lower bound max{1, (1 + p ln z)/3} <= g_y(z) everywhere.
        let mut worst = (f64::INFINITY, 0u64);
        for &y in &count_grid(40) {
            for &z in log_grid(1e-4 * p.root(y as f64).max(1e-4), 1e4, 256).iter() {
                let g = point_loss_unchecked(y, z, p);
                let slack = (g - cost_lower_bound(y, z, p)) / g.max(1.0);
                if slack < worst.0 {
                    worst = (slack, y);
                }
            }
        }
        report.outcomes.push(CheckOutcome {
            check: "cost_lower_bound".into(),
            y: worst.1,
            p: p.p_int(),
            param: String::new(),
            worst_slack: worst.0,
            pass: worst.0 >= -1e-9,
        });
    }

    // Tangency of the minimal p=1 envelope slope.
    for &y in &[1u64, 10, 100, 1_000, 10_000, 1_000_000] {
        let t = lambda_star(y);
        let scale = 1.0f64.max(point_loss_unchecked(y, t.z_star, LinkPower::Id));
        let value_ok = t.residual_value <= 1e-8 * scale;
        let slope_ok = t.residual_slope <= 1e-8;
        report.outcomes.push(CheckOutcome {
            check: "tangency_residuals".into(),
            y,
            p: 1,
            param: format!("lambda_star={:.6}", t.lambda_star),
            worst_slack: -(t.residual_value / scale).max(t.residual_slope),
            pass: value_ok && slope_ok,
        });
        if y >= 2 {
            let yf = y as f64;
            let log_term = (2.0 * std::f64::consts::PI * yf).ln();
            let lo = (yf / (2.0 * log_term)).sqrt();
            let hi = (26.0 * yf / (6.0 * log_term)).sqrt();
            let slack = (t.lambda_star - lo).min(hi - t.lambda_star);
            report.outcomes.push(CheckOutcome {
                check: "tangency_bracket".into(),
                y,
                p: 1,
                param: format!("bracket=[{lo:.4},{hi:.4}]"),
                worst_slack: slack,
                pass: slack >= 0.0,
            });
        }
    }
    Ok(())
}

fn lambert_suite(report: &mut VerifyReport) -> Result<()> {
    let inv_e = 1.0 / std::f64::consts::E;
    let grid: Vec<f64> = (0..100_000)
        .map(|k| -inv_e + (inv_e - 1e-12) * k as f64 / 100_000.0)
        .collect();
    let r = lambert_bounds_check(&grid, 1e-12)?;
    report.outcomes.push(CheckOutcome {
        check: "lambert_lower_bound".into(),
        y: 0,
        p: 0,
        param: format!("grid={}", grid.len()),
        worst_slack: r.worst_lower_slack,
        pass: r.worst_lower_slack >= -1e-12,
    });
    report.outcomes.push(CheckOutcome {
        check: "lambert_upper_bound".into(),
        y: 0,
        p: 0,
        param: format!("grid={}", grid.len()),
        worst_slack: r.worst_upper_slack,
        pass: r.worst_upper_slack >= -1e-12,
    });
    let mut worst_residual = r.worst_identity_residual;
    for &x in log_grid(1e-6, 1e6, 2_000).iter() {
        let w = crate::envelopes::lambert_w0(x)?;
        worst_residual = worst_residual.max((w * w.exp() - x).abs() / x.max(1.0));
    }
    report.outcomes.push(CheckOutcome {
        check: "lambert_identity".into(),
        y: 0,
        p: 0,
        param: "domain=[-1/e,1e6]".into(),
        worst_slack: 1e-13 - worst_residual,
        pass: worst_residual <= 1e-13,
    });
    Ok(())
}

fn rounding_suite(report: &mut VerifyReport) -> Result<()> {
    for &p in &[LinkPower::Id, LinkPower::Sqrt] {
        let mut worst_lower = (f64::INFINITY, 0u64, String::new());
        let mut worst_upper = (f64::INFINITY, 0u64, String::new());
        for y in 8u64..=64 {
            let tau = p.root(y as f64);
            let grid: Vec<f64> = (1..=512)
                .map(|j| tau * 100f64.powf(j as f64 / 512.0))
                .collect();
            for &eps in &[0.05, 0.1, 0.25] {
                let top = ((1.0 + eps) * y as f64).floor() as u64;
                for y_prime in (y + 1)..=top {
                    let r = rounding_check(y, y_prime, eps, p, &grid)?;
                    if r.worst_lower_slack < worst_lower.0 {
                        worst_lower =
                            (r.worst_lower_slack, y, format!("y'={y_prime} eps={eps}"));
                    }
                    if r.worst_upper_slack < worst_upper.0 {
                        worst_upper =
                            (r.worst_upper_slack, y, format!("y'={y_prime} eps={eps}"));
                    }
                }
            }
        }
        report.outcomes.push(CheckOutcome {
            check: "rounding_lower".into(),
            y: worst_lower.1,
            p: p.p_int(),
            param: worst_lower.2.clone(),
            worst_slack: worst_lower.0,
            pass: worst_lower.0 >= -1e-10,
        });
        report.outcomes.push(CheckOutcome {
            check: "rounding_upper".into(),
            y: worst_upper.1,
            p: p.p_int(),
            param: worst_upper.2.clone(),
            worst_slack: worst_upper.0,
            pass: worst_upper.0 >= -1e-10,
        });
    }
    Ok(())
}

fn shift_suite(report: &mut VerifyReport) -> Result<()> {
    let eta_grid = [1e-4, 1e-3, 1e-2, 1e-1];
    for &p in &[LinkPower::Id, LinkPower::Sqrt] {
        let mut worst = f64::INFINITY;
        let mut tightest = f64::NEG_INFINITY;
        let mut triples = 0usize;
        for instance in 0..10u64 {
            let (data, _) = generate_f2(150, 4, p, 1000 + instance)?;
            let r = shift_gap_check(&data, p, &eta_grid, 3, 500 + instance)?;
            worst = worst.min(r.worst_relative_slack);
            tightest = tightest.max(r.tightest_constant);
            triples += r.trials * eta_grid.len();
        }
        let limit = match p {
            LinkPower::Id => 0.0,
            LinkPower::Sqrt => 6.0,
        };
        report.outcomes.push(CheckOutcome {
            check: "shift_bound".into(),
            y: 0,
            p: p.p_int(),
            param: format!("triples={triples} c_obs={tightest:.4} c_max={limit}"),
            worst_slack: worst.min(limit - tightest + 1e-12),
            pass: worst >= -1e-9 && tightest <= limit + 1e-9,
        });
    }

    let witness = counterexample_p_geq_3(3, 1.0, 0.01)?;
    report.outcomes.push(CheckOutcome {
        check: "p3_counterexample".into(),
        y: witness.y_witness,
        p: 3,
        param: format!("lhs={:.4} rhs={:.4}", witness.lhs, witness.rhs),
        worst_slack: witness.rhs - witness.lhs,
        pass: witness.lhs < witness.rhs,
    });
    Ok(())
}
