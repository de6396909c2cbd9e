//! Closed-form envelope bounds on the per-point loss `g_y`.
//!
//! For `z > y^{1/p}` the loss is sandwiched as
//! `(z - y^{1/p})^p / λ ≤ g_y(z) ≤ z^p`, with `λ = 1` for p=2 and a
//! `O(sqrt(y / log y))` slope divisor for p=1. The minimal valid divisor
//! `λ*(y)` has a closed form in the principal branch of the Lambert W
//! function, which this module evaluates together with square-root upper
//! and lower bounds tight enough to bracket it. Label rounding to
//! geometric boundaries and the `p ≥ 3` counterexample search live here
//! as well.

use crate::model::{log_factorial, log_factorial_residual, point_loss_unchecked, LinkPower};
use crate::{Error, Result};

const INV_E: f64 = 1.0 / std::f64::consts::E;

/// Geometric grid with `points` entries from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && points >= 2);
    let ratio = hi / lo;
    (0..points)
        .map(|j| lo * ratio.powf(j as f64 / (points - 1) as f64))
        .collect()
}

/// Cost lower bound `g_y(z) ≥ max{1, (1 + p ln z) / 3}` for `y ≥ 1`.
pub fn cost_lower_bound(y: u64, z: f64, p: LinkPower) -> f64 {
    debug_assert!(y >= 1 && z > 0.0);
    1.0f64.max((1.0 + p.p() * z.ln()) / 3.0)
}

/// `LB(y) = max{1, (1 + ln y) / 3}`, the minimum-cost bound entering the
/// constructive slope divisor for p=1.
pub fn lb_y(y: u64) -> f64 {
    debug_assert!(y >= 1);
    1.0f64.max((1.0 + (y as f64).ln()) / 3.0)
}

/// Constructive envelope slope divisor for p=1:
/// `λ(y) = (sqrt(4y / LB(y) + 1) + 1) / 2`, of order `sqrt(y / log y)`.
pub fn lambda_p1(y: u64) -> f64 {
    debug_assert!(y >= 1);
    0.5 * ((4.0 * y as f64 / lb_y(y) + 1.0).sqrt() + 1.0)
}

/// Slope divisor used by the sandwich: [`lambda_p1`] for p=1, exactly 1
/// for p=2 (and for `y = 0`, where both envelope sides equal `z^p`).
pub fn envelope_lambda(y: u64, p: LinkPower) -> f64 {
    if y == 0 {
        return 1.0;
    }
    match p {
        LinkPower::Id => lambda_p1(y),
        LinkPower::Sqrt => 1.0,
    }
}

/// Pointwise sandwich verification result. Slacks are relative to
/// `g_y(z)` and negative slack means a violated inequality.
#[derive(Debug, Clone, Copy)]
pub struct SandwichReport {
    pub y: u64,
    pub lambda: f64,
    pub worst_lower_slack: f64,
    pub worst_upper_slack: f64,
    pub ok: bool,
}

/// Check `(z - y^{1/p})^p / λ ≤ g_y(z) ≤ z^p` on a grid of predictors all
/// strictly above `y^{1/p}`.
pub fn envelope_sandwich_check(
    y: u64,
    p: LinkPower,
    z_grid: &[f64],
    rel_tol: f64,
) -> Result<SandwichReport> {
    let tau = p.root(y as f64);
    let lambda = envelope_lambda(y, p);
    let mut worst_lower = f64::INFINITY;
    let mut worst_upper = f64::INFINITY;
    for &z in z_grid {
        if z <= tau {
            return Err(Error::InvalidInput(format!(
                "sandwich grid point z = {z} not above y^(1/p) = {tau}"
            )));
        }
        let g = point_loss_unchecked(y, z, p);
        let lower = p.pow(z - tau) / lambda;
        let upper = p.pow(z);
        let scale = g.max(f64::MIN_POSITIVE);
        worst_lower = worst_lower.min((g - lower) / scale);
        worst_upper = worst_upper.min((upper - g) / scale);
    }
    Ok(SandwichReport {
        y,
        lambda,
        worst_lower_slack: worst_lower,
        worst_upper_slack: worst_upper,
        ok: worst_lower >= -rel_tol && worst_upper >= -rel_tol,
    })
}

/// Principal branch of the Lambert W function, `W0(x) e^{W0(x)} = x`.
///
/// Arguments slightly below `-1/e` (within 1e-15) are clamped to the
/// branch point. Safeguarded Halley iteration inside a certified bracket:
/// for negative arguments the bracket is `[sqrt(1+ex)-1, sqrt(2(1+ex))-1]`,
/// for positive ones `[x/(1+x), ln(1+x)]`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::InvalidInput("lambert_w0 of NaN".into()));
    }
    if x < -INV_E {
        if x >= -INV_E - 1e-15 {
            return Ok(-1.0);
        }
        return Err(Error::InvalidInput(format!(
            "lambert_w0 argument {x} below -1/e"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi, seed) = if x < 0.0 {
        let q = 1.0 + std::f64::consts::E * x;
        let delta = (2.0 * q).sqrt();
        if delta < 1e-4 {
            // Branch-point series, error O(delta^5).
            let w = -1.0 + delta - delta * delta / 3.0 + 11.0 / 72.0 * delta.powi(3)
                - 43.0 / 540.0 * delta.powi(4);
            return Ok(w);
        }
        let lo = q.sqrt() - 1.0;
        let hi = delta - 1.0;
        (lo, hi, 0.5 * (lo + hi))
    } else {
        let lo = x / (1.0 + x);
        let hi = x.ln_1p();
        let seed = if x > std::f64::consts::E {
            let l = x.ln();
            l - l.ln() + l.ln() / l
        } else {
            0.5 * (lo + hi)
        };
        (lo, hi, seed)
    };
    let target = 1e-14 * x.abs().max(1.0);
    let mut w = seed.clamp(lo, hi);
    for _ in 0..128 {
        let ew = w.exp();
        let f = w * ew - x;
        if f.abs() <= target {
            return Ok(w);
        }
        if f > 0.0 {
            hi = hi.min(w);
        } else {
            lo = lo.max(w);
        }
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let mut next = w - f / denom;
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if next == w {
            break;
        }
        w = next;
    }
    Ok(w)
}

/// Worst slacks of the square-root bounds
/// `sqrt(1+ex) - 1 ≤ W0(x) ≤ sqrt(2(1+ex)) - 1` on a grid in `[-1/e, 0)`.
#[derive(Debug, Clone, Copy)]
pub struct LambertBoundsReport {
    pub worst_lower_slack: f64,
    pub worst_upper_slack: f64,
    pub worst_identity_residual: f64,
    pub ok: bool,
}

pub fn lambert_bounds_check(x_grid: &[f64], slack_tol: f64) -> Result<LambertBoundsReport> {
    let mut worst_lower = f64::INFINITY;
    let mut worst_upper = f64::INFINITY;
    let mut worst_residual = 0.0f64;
    for &x in x_grid {
        if !(-INV_E - 1e-15..0.0).contains(&x) {
            return Err(Error::InvalidInput(format!(
                "lambert bounds grid point {x} outside [-1/e, 0)"
            )));
        }
        let q = (1.0 + std::f64::consts::E * x).max(0.0);
        let lower = q.sqrt() - 1.0;
        let upper = (2.0 * q).sqrt() - 1.0;
        let w = lambert_w0(x)?;
        worst_lower = worst_lower.min(w - lower);
        worst_upper = worst_upper.min(upper - w);
        let residual = (w * w.exp() - x).abs() / x.abs().max(1.0);
        worst_residual = worst_residual.max(residual);
    }
    Ok(LambertBoundsReport {
        worst_lower_slack: worst_lower,
        worst_upper_slack: worst_upper,
        worst_identity_residual: worst_residual,
        ok: worst_lower >= -slack_tol && worst_upper >= -slack_tol,
    })
}

/// Tangency data for the minimal p=1 envelope slope divisor.
#[derive(Debug, Clone, Copy)]
pub struct TangencyResult {
    /// `λ*(y) = (W0(-y e^{-2} / (y!)^{1/y}) + 1)^{-1}`.
    pub lambda_star: f64,
    /// Tangent abscissa `z*(y) = y λ* / (λ* - 1)`.
    pub z_star: f64,
    /// `|g_y(z*) - (z* - y)/λ*|`.
    pub residual_value: f64,
    /// `|g'_y(z*) - 1/λ*|`.
    pub residual_slope: f64,
}

/// Minimal slope divisor at which the line `(z - y)/λ` is tangent to
/// `g_y` for p=1, with the tangency residuals evaluated explicitly.
pub fn lambda_star(y: u64) -> TangencyResult {
    assert!(y >= 1, "tangency is defined for counts y >= 1");
    let yf = y as f64;
    // (y!)^{1/y} evaluated as exp(ln(y!)/y) so the argument never
    // overflows; it provably lies in (-1/e, -e^{-2}].
    let arg = -(yf.ln() - 2.0 - log_factorial(y) / yf).exp();
    let w = lambert_w0(arg).expect("tangency argument stays inside the W0 domain");
    let lambda = 1.0 / (w + 1.0);
    let span = yf / (lambda - 1.0); // z* - y, kept separate from z*
    let z_star = yf + span;
    let g = span - yf * (1.0 / (lambda - 1.0)).ln_1p() + log_factorial_residual(y);
    let h = span / lambda;
    let slope = span / z_star; // g'(z*) = 1 - y/z*
    TangencyResult {
        lambda_star: lambda,
        z_star,
        residual_value: (g - h).abs(),
        residual_slope: (slope - 1.0 / lambda).abs(),
    }
}

/// Pointwise verification of the label-rounding approximation
/// `(1-3ε) g_y(z) ≤ g_{y'}(z) ≤ (1+3ε) g_y(z)`.
#[derive(Debug, Clone, Copy)]
pub struct RoundingReport {
    pub worst_lower_slack: f64,
    pub worst_upper_slack: f64,
    pub ok: bool,
}

pub fn rounding_check(
    y: u64,
    y_prime: u64,
    eps: f64,
    p: LinkPower,
    z_grid: &[f64],
) -> Result<RoundingReport> {
    if y < 8 {
        return Err(Error::InvalidInput(format!(
            "rounding approximation needs y >= 8, got {y}"
        )));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidInput(format!("eps = {eps} outside (0, 1]")));
    }
    if !(y_prime > y && y_prime as f64 <= (1.0 + eps) * y as f64) {
        return Err(Error::InvalidInput(format!(
            "y' = {y_prime} not in (y, (1+eps) y] for y = {y}, eps = {eps}"
        )));
    }
    let mut worst_lower = f64::INFINITY;
    let mut worst_upper = f64::INFINITY;
    for &z in z_grid {
        if z <= 0.0 {
            return Err(Error::NonPositivePredictor(z));
        }
        let g = point_loss_unchecked(y, z, p);
        let g_prime = point_loss_unchecked(y_prime, z, p);
        worst_lower = worst_lower.min((g_prime - (1.0 - 3.0 * eps) * g) / g);
        worst_upper = worst_upper.min(((1.0 + 3.0 * eps) * g - g_prime) / g);
    }
    Ok(RoundingReport {
        worst_lower_slack: worst_lower,
        worst_upper_slack: worst_upper,
        ok: worst_lower >= -1e-10 && worst_upper >= -1e-10,
    })
}

/// Round labels of at least 8 up to the geometric boundaries
/// `ceil(8 (1+eps)^k)`; smaller labels are kept verbatim. Returns the
/// rounded labels and a per-row group index (groups 0..=7 hold the small
/// labels).
pub fn round_labels(labels: &[u64], eps: f64) -> Result<(Vec<u64>, Vec<usize>)> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidInput(format!("eps = {eps} outside (0, 1]")));
    }
    let y_max = labels.iter().copied().max().unwrap_or(0);
    let mut boundaries = vec![8u64];
    let mut power = 8.0f64;
    while *boundaries.last().unwrap() < y_max.max(8) {
        power *= 1.0 + eps;
        let b = power.ceil() as u64;
        if b > *boundaries.last().unwrap() {
            boundaries.push(b);
        }
    }
    let mut rounded = Vec::with_capacity(labels.len());
    let mut groups = Vec::with_capacity(labels.len());
    for &y in labels {
        if y < 8 {
            rounded.push(y);
            groups.push(y as usize);
        } else {
            let idx = boundaries.partition_point(|&b| b < y);
            rounded.push(boundaries[idx]);
            groups.push(8 + idx);
        }
    }
    Ok((rounded, groups))
}

/// Witness that the domain-shift error bound admits no absolute constant
/// for integer `p ≥ 3`: the smallest count (located by doubling plus
/// binary refinement) where `C g_y(y^{1/p})` falls strictly below
/// `p η (p-1)/2 · y^{(p-2)/p}`.
#[derive(Debug, Clone, Copy)]
pub struct CounterexampleResult {
    pub y_witness: u64,
    /// `C · g_y(y^{1/p})` at the witness.
    pub lhs: f64,
    /// `p η (p-1)/2 · y^{(p-2)/p}` at the witness.
    pub rhs: f64,
}

pub fn counterexample_p_geq_3(p: u32, c: f64, eta: f64) -> Result<CounterexampleResult> {
    if p < 3 {
        return Err(Error::InvalidInput(format!(
            "counterexample applies to p >= 3, got {p}"
        )));
    }
    if !(c > 0.0) || !(eta > 0.0) {
        return Err(Error::InvalidInput(
            "counterexample needs C > 0 and eta > 0".into(),
        ));
    }
    let pf = f64::from(p);
    let target = 2.0 * c / (pf * (pf - 1.0) * eta);
    let threshold = |y: u64| {
        let yf = y as f64;
        yf.powf((pf - 2.0) / pf)
            / (0.5 * (2.0 * std::f64::consts::PI * yf).ln() + 1.0 / (12.0 * yf))
    };
    let mut y = 1u64;
    while threshold(y) <= target {
        y = y.checked_mul(2).ok_or_else(|| {
            Error::InvalidInput("counterexample witness exceeds u64 range".into())
        })?;
    }
    let (mut lo, mut hi) = (y / 2, y);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if threshold(mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let y_witness = hi;
    let yf = y_witness as f64;
    // g_y(y^{1/p}) = ln y! - y ln y + y regardless of p.
    let lhs = c * log_factorial_residual(y_witness);
    let rhs = pf * eta * (pf - 1.0) / 2.0 * yf.powf((pf - 2.0) / pf);
    Ok(CounterexampleResult { y_witness, lhs, rhs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Independent oracle: bisection on w e^w = x over w >= -1.
    fn w0_bisect(x: f64) -> f64 {
        let (mut lo, mut hi) = (-1.0f64, x.abs().max(1.0) + 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * mid.exp() < x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn lambert_w0_examples() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        assert_relative_eq!(lambert_w0(-INV_E).unwrap(), -1.0, max_relative = 1e-12);
        assert_relative_eq!(
            lambert_w0(1.0).unwrap(),
            w0_bisect(1.0),
            max_relative = 1e-13
        );
        assert!(lambert_w0(-INV_E - 1e-10).is_err());
        // Clamp tolerance just below the branch point.
        assert_eq!(lambert_w0(-INV_E - 1e-16).unwrap(), -1.0);
    }

    #[test]
    fn lambert_w0_identity_residual_everywhere() {
        let mut worst = 0.0f64;
        for &x in log_grid(1e-8, 1e6, 400).iter() {
            let w = lambert_w0(x).unwrap();
            worst = worst.max((w * w.exp() - x).abs() / x.max(1.0));
        }
        for k in 0..400 {
            let x = -INV_E + (INV_E - 1e-12) * k as f64 / 400.0;
            let w = lambert_w0(x).unwrap();
            worst = worst.max((w * w.exp() - x).abs());
        }
        assert!(worst <= 1e-13, "worst identity residual {worst}");
    }

    #[test]
    fn lambert_w0_matches_bisection_oracle() {
        for &x in &[-0.36, -0.3, -0.135335, -0.01, 0.5, 2.0, 100.0, 1e6] {
            assert_relative_eq!(
                lambert_w0(x).unwrap(),
                w0_bisect(x),
                max_relative = 1e-12,
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn lambert_bounds_hold_on_grid() {
        let grid: Vec<f64> = (0..10_000)
            .map(|k| -INV_E + (INV_E - 1e-9) * k as f64 / 10_000.0)
            .collect();
        let report = lambert_bounds_check(&grid, 1e-12).unwrap();
        assert!(report.ok, "{report:?}");
        assert!(report.worst_identity_residual <= 1e-13);
    }

    #[test]
    fn cost_lower_bound_examples() {
        assert_eq!(cost_lower_bound(1, 1.0, LinkPower::Id), 1.0);
        // At z = e^2 the logarithmic branch exactly reaches 1.
        let z = std::f64::consts::E.powi(2);
        assert_relative_eq!(cost_lower_bound(5, z, LinkPower::Id), 1.0, max_relative = 1e-12);
        // Random sweep: the bound never exceeds the loss.
        for &y in &[1u64, 3, 40, 900, 77_000] {
            for &p in &[LinkPower::Id, LinkPower::Sqrt] {
                for &z in log_grid(1e-4, 1e4, 160).iter() {
                    let g = point_loss_unchecked(y, z, p);
                    assert!(
                        cost_lower_bound(y, z, p) <= g + 1e-9 * g.abs().max(1.0),
                        "bound above loss at y={y}, z={z}"
                    );
                }
            }
        }
    }

    #[test]
    fn lambda_p1_closed_form() {
        assert_relative_eq!(
            lambda_p1(1),
            0.5 * (5.0f64.sqrt() + 1.0),
            max_relative = 1e-15
        );
        // Quadrupling y roughly doubles the divisor once the log factor moves slowly.
        let big = lambda_p1(4_000_000) / lambda_p1(1_000_000);
        assert!((big - 2.0).abs() < 0.1, "growth factor {big}");
    }

    #[test]
    fn lambda_p1_envelope_validity() {
        for &y in &[1u64, 2, 17, 1_000, 250_000] {
            let yf = y as f64;
            let lambda = lambda_p1(y);
            for &z in log_grid(yf * 1.0001, yf * 100.0, 300).iter() {
                let g = point_loss_unchecked(y, z, LinkPower::Id);
                let h = (z - yf) / lambda;
                assert!(h <= g + 1e-9 * g, "envelope above loss at y={y}, z={z}");
            }
        }
    }

    #[test]
    fn sandwich_examples() {
        // (2-1)^2/1 = 1 <= g_1(2) <= 4 for p=2.
        let report =
            envelope_sandwich_check(1, LinkPower::Sqrt, &[2.0], 1e-9).unwrap();
        assert!(report.ok);
        let g = point_loss_unchecked(1, 2.0, LinkPower::Sqrt);
        assert_relative_eq!(g, 4.0 - 2.0 * 2.0f64.ln(), max_relative = 1e-14);

        // y = 0: both sides coincide with z^p.
        let report = envelope_sandwich_check(0, LinkPower::Id, &[0.5, 3.0], 1e-9).unwrap();
        assert!(report.ok);
        assert!(report.worst_lower_slack.abs() < 1e-12);

        // Grid point at the minimizer is rejected.
        assert!(envelope_sandwich_check(4, LinkPower::Sqrt, &[2.0], 1e-9).is_err());
    }

    #[test]
    fn sandwich_sweep_small() {
        for &p in &[LinkPower::Id, LinkPower::Sqrt] {
            for &y in &[1u64, 12, 420, 65_536, 1_000_000] {
                let tau = p.root(y as f64);
                let grid: Vec<f64> = (1..=256)
                    .map(|j| tau * 100f64.powf(j as f64 / 256.0))
                    .collect();
                let report = envelope_sandwich_check(y, p, &grid, 1e-9).unwrap();
                assert!(report.ok, "sandwich failed: {report:?}");
            }
        }
    }

    #[test]
    fn lambda_star_example_y1() {
        let t = lambda_star(1);
        // Argument is exactly -e^{-2}; frozen from the bisection oracle.
        let w = w0_bisect(-(-2.0f64).exp());
        assert_relative_eq!(w, -0.15859433956303937, max_relative = 1e-10);
        assert_relative_eq!(t.lambda_star, 1.0 / (w + 1.0), max_relative = 1e-11);
        assert_relative_eq!(t.lambda_star, 1.18849, max_relative = 1e-5);
    }

    #[test]
    fn lambda_star_tangency_residuals() {
        for &y in &[1u64, 10, 100, 1_000, 10_000, 1_000_000] {
            let t = lambda_star(y);
            assert!(t.z_star > y as f64);
            let scale = 1.0f64.max(point_loss_unchecked(y, t.z_star, LinkPower::Id));
            assert!(
                t.residual_value <= 1e-8 * scale,
                "value residual {} at y={y}",
                t.residual_value
            );
            assert!(
                t.residual_slope <= 1e-8,
                "slope residual {} at y={y}",
                t.residual_slope
            );
        }
    }

    #[test]
    fn lambda_star_growth_bracket() {
        for &y in &[2u64, 10, 1_000, 250_000, 1_000_000] {
            let yf = y as f64;
            let log_term = (2.0 * std::f64::consts::PI * yf).ln();
            let lo = (yf / (2.0 * log_term)).sqrt();
            let hi = (26.0 * yf / (6.0 * log_term)).sqrt();
            let t = lambda_star(y);
            assert!(
                t.lambda_star >= lo && t.lambda_star <= hi,
                "lambda* {} outside [{lo}, {hi}] at y={y}",
                t.lambda_star
            );
        }
    }

    #[test]
    fn lambda_star_is_minimal_slope() {
        for &y in &[1u64, 10, 100, 10_000] {
            let t = lambda_star(y);
            let shrunk = 0.999 * t.lambda_star;
            let g = point_loss_unchecked(y, t.z_star, LinkPower::Id);
            let h = (t.z_star - y as f64) / shrunk;
            assert!(h > g, "shrunken envelope must cross the loss at y={y}");
        }
    }

    #[test]
    fn rounding_example() {
        let report = rounding_check(8, 9, 0.125, LinkPower::Id, &[8.0]).unwrap();
        assert!(report.ok);
        // y' = y violates the strict precondition.
        assert!(rounding_check(8, 8, 0.125, LinkPower::Id, &[8.0]).is_err());
        assert!(rounding_check(7, 8, 0.5, LinkPower::Id, &[8.0]).is_err());
    }

    #[test]
    fn rounding_sweep_above_minimizer() {
        for &p in &[LinkPower::Id, LinkPower::Sqrt] {
            for y in 8u64..=64 {
                for &eps in &[0.05, 0.1, 0.25] {
                    let top = ((1.0 + eps) * y as f64).floor() as u64;
                    for y_prime in (y + 1)..=top {
                        let tau = p.root(y as f64);
                        let grid: Vec<f64> =
                            (1..=96).map(|j| tau * 100f64.powf(j as f64 / 96.0)).collect();
                        let report =
                            rounding_check(y, y_prime, eps, p, &grid).unwrap();
                        assert!(report.ok, "rounding failed at y={y}, y'={y_prime}, eps={eps}");
                    }
                }
            }
        }
    }

    #[test]
    fn rounding_violated_below_minimizer_at_boundary_pairs() {
        // The (1+3eps) factor does not extend below the minimizer once
        // y*eps^2 outgrows log(y): at (y=24, y'=30, eps=0.25) the ratio
        // g_{y'}/g_y exceeds 1.75 near z ~ 16. The checker must report
        // the violation.
        let grid = log_grid(14.0, 18.0, 64);
        let report = rounding_check(24, 30, 0.25, LinkPower::Id, &grid).unwrap();
        assert!(!report.ok);
        assert!(report.worst_upper_slack < -1e-3);
    }

    #[test]
    fn round_labels_examples() {
        let (rounded, groups) = round_labels(&[7, 8, 100], 0.1).unwrap();
        assert_eq!(rounded[0], 7);
        assert_eq!(groups[0], 7);
        assert_eq!(rounded[1], 8);
        assert!(rounded[2] >= 100 && rounded[2] <= (1.1f64 * 100.0).ceil() as u64);
        // Group count stays logarithmic in y_max.
        let labels: Vec<u64> = (0..4_000).map(|i| i * 250).collect();
        let (_, groups) = round_labels(&labels, 0.1).unwrap();
        let distinct: std::collections::BTreeSet<usize> = groups.into_iter().collect();
        let cap = (1e6f64.ln() / 0.1) as usize + 16;
        assert!(distinct.len() <= cap, "{} groups", distinct.len());
    }

    #[test]
    fn round_labels_upper_bound_property() {
        let labels: Vec<u64> = (8..2_000).collect();
        for &eps in &[0.05, 0.3, 1.0] {
            let (rounded, _) = round_labels(&labels, eps).unwrap();
            for (&y, &y2) in labels.iter().zip(rounded.iter()) {
                assert!(y2 >= y);
                assert!(y2 as f64 <= ((1.0 + eps) * y as f64).ceil());
            }
        }
    }

    #[test]
    fn counterexample_examples() {
        let result = counterexample_p_geq_3(3, 1.0, 0.01).unwrap();
        assert!(result.lhs < result.rhs, "{result:?}");
        // Larger C weakly increases the witness.
        let bigger = counterexample_p_geq_3(3, 10.0, 0.01).unwrap();
        assert!(bigger.y_witness >= result.y_witness);
        assert!(counterexample_p_geq_3(2, 1.0, 0.01).is_err());
    }

    #[test]
    fn counterexample_other_powers() {
        for p in [3u32, 4, 7] {
            let result = counterexample_p_geq_3(p, 2.5, 0.001).unwrap();
            assert!(result.lhs < result.rhs, "p={p}: {result:?}");
        }
    }
}
