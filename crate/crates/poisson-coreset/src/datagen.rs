//! Synthetic instance generators.
//!
//! Two families: the simplex benchmark (hull vertices plus Gaussian rows
//! mapped strictly inside, Poisson labels from a planted parameter) and
//! the equidistant-circle hard instance whose every row is an extreme
//! point. Row-level randomness comes from counter-based ChaCha streams
//! derived from the seed, so generation is deterministic and
//! order-independent.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::model::{log_factorial, point_loss_log, point_loss_unchecked, Dataset, LinkPower};
use crate::{Error, Result};

/// Generator family tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    F2,
    Circle,
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f2" => Ok(Family::F2),
            "circle" => Ok(Family::Circle),
            other => Err(Error::Parse(format!("unknown family '{other}'"))),
        }
    }
}

/// Description of a synthetic instance, also written as the sidecar JSON
/// next to generated CSVs.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SyntheticSpec {
    pub family: Family,
    pub n: usize,
    /// Total columns including the intercept.
    pub d: usize,
    pub p: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Sidecar {
    pub family: Family,
    pub n: usize,
    pub d: usize,
    pub p: u32,
    pub seed: u64,
    pub true_beta: Option<Vec<f64>>,
}

pub fn write_sidecar(
    path: &Path,
    spec: &SyntheticSpec,
    true_beta: Option<&DVector<f64>>,
) -> Result<()> {
    let sidecar = Sidecar {
        family: spec.family,
        n: spec.n,
        d: spec.d,
        p: spec.p,
        seed: spec.seed,
        true_beta: true_beta.map(|b| b.iter().copied().collect()),
    };
    let text = serde_json::to_string_pretty(&sidecar)
        .map_err(|e| Error::Parse(format!("sidecar serialization: {e}")))?;
    std::fs::write(path, text)?;
    Ok(())
}

fn row_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seeded Poisson draw: inversion below rate 30, transformed rejection
/// (PTRS) above.
pub fn poisson_sample<R: Rng>(rate: f64, rng: &mut R) -> u64 {
    assert!(
        rate.is_finite() && rate >= 0.0,
        "poisson rate must be finite and nonnegative"
    );
    if rate == 0.0 {
        0
    } else if rate < 30.0 {
        poisson_inversion(rate, rng)
    } else {
        poisson_ptrs(rate, rng)
    }
}

fn poisson_inversion<R: Rng>(rate: f64, rng: &mut R) -> u64 {
    let cap = (10.0 * rate) as u64 + 100;
    let mut x = 0u64;
    let mut p = (-rate).exp();
    let mut s = p;
    let u: f64 = rng.gen();
    while u > s {
        x += 1;
        if x > cap {
            break;
        }
        p *= rate / x as f64;
        s += p;
    }
    x
}

// Hörmann's PTRS transformed rejection; uses the exact ln(k!) table.
fn poisson_ptrs<R: Rng>(rate: f64, rng: &mut R) -> u64 {
    let log_rate = rate.ln();
    let b = 0.931 + 2.53 * rate.sqrt();
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let v_r = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u: f64 = rng.gen::<f64>() - 0.5;
        let v: f64 = rng.gen();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + rate + 0.43).floor();
        if us >= 0.07 && v <= v_r {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = (v * inv_alpha / (a / (us * us) + b)).ln();
        let rhs = k * log_rate - rate - log_factorial(k as u64);
        if lhs <= rhs {
            return k as u64;
        }
    }
}

/// Simplex benchmark instance.
///
/// `d` counts the intercept, so the feature space has `d - 1 ≥ 2`
/// dimensions. The first `d` rows are the hull vertices (the `d - 1`
/// standard basis vectors followed by the origin); the remaining rows are
/// standard Gaussians translated and rescaled — one global shift making
/// every entry positive, one global scale bringing every row sum below
/// 1 — so they land strictly inside the simplex. With many rows the
/// shift and scale are dominated by the most extreme Gaussian entries,
/// which concentrates the interior cloud and leaves some coordinates
/// very close to the hull facets. A planted parameter `β = (b, β̃)` with
/// `β̃ ~ 10^{1/p} N(0, I)` and `b = max{1, 2^{1/p} |min_i z_i β̃|}` keeps
/// every rate positive; labels are Poisson draws at rate `(x_i β)^p`.
pub fn generate_f2(n: usize, d: usize, p: LinkPower, seed: u64) -> Result<(Dataset, DVector<f64>)> {
    let df = d.saturating_sub(1);
    if df < 2 {
        return Err(Error::InvalidInput(format!(
            "simplex family needs d - 1 >= 2 feature dimensions, got d = {d}"
        )));
    }
    if n < d {
        return Err(Error::InvalidInput(format!(
            "simplex family needs n >= d, got n = {n}, d = {d}"
        )));
    }

    let mut features = DMatrix::zeros(n, df);
    for j in 0..df {
        features[(j, j)] = 1.0;
    }
    // Row d-1 is the origin, already zero.
    if n > d {
        let mut gaussians = DMatrix::zeros(n - d, df);
        for i in d..n {
            let mut rng = row_rng(seed, 1 + i as u64);
            for j in 0..df {
                gaussians[(i - d, j)] = StandardNormal.sample(&mut rng);
            }
        }
        let g_min = gaussians.iter().copied().fold(f64::INFINITY, f64::min);
        let g_max = gaussians.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let shift = -g_min + 0.01 * (g_max - g_min).max(1.0);
        // Cap each coordinate below 0.99/(d-1) so every row sum stays
        // under 0.99 regardless of the row.
        let scale = df as f64 * (g_max + shift) / 0.99;
        for i in d..n {
            for j in 0..df {
                features[(i, j)] = (gaussians[(i - d, j)] + shift) / scale;
            }
        }
    }

    let mut beta_rng = row_rng(seed, 0);
    let sigma = 10f64.powf(1.0 / p.p());
    let beta_tilde = DVector::from_fn(df, |_, _| {
        let g: f64 = StandardNormal.sample(&mut beta_rng);
        sigma * g
    });

    let projected = &features * &beta_tilde;
    let min_proj = projected.iter().copied().fold(f64::INFINITY, f64::min);
    let intercept = 1.0f64.max(2f64.powf(1.0 / p.p()) * min_proj.abs());

    let mut beta = DVector::zeros(d);
    beta[0] = intercept;
    for j in 0..df {
        beta[j + 1] = beta_tilde[j];
    }

    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let z = intercept + projected[i];
        debug_assert!(z > 0.0);
        let rate = p.pow(z);
        let mut rng = row_rng(seed, 1 + n as u64 + i as u64);
        labels.push(poisson_sample(rate, &mut rng));
    }

    let data = Dataset::from_features(features, labels)?;
    Ok((data, beta))
}

/// Circle hard instance: `n` equidistant points on the unit circle
/// embedded in the first two feature coordinates, every label 1. All `n`
/// rows are extreme points of the hull.
pub fn generate_circle(n: usize, d: usize, _seed: u64) -> Result<Dataset> {
    if n < 8 {
        return Err(Error::InvalidInput(format!(
            "circle family needs n >= 8, got {n}"
        )));
    }
    if d < 3 {
        return Err(Error::InvalidInput(format!(
            "circle family needs d >= 3, got {d}"
        )));
    }
    let df = d - 1;
    let mut features = DMatrix::zeros(n, df);
    for i in 1..=n {
        let angle = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
        features[(i - 1, 0)] = angle.cos();
        features[(i - 1, 1)] = angle.sin();
    }
    Dataset::from_features(features, vec![1; n])
}

/// Sensitivity lower bound of the deep-margin circle query, evaluated in
/// log-space so that margins as small as `exp(-n^2)` stay representable.
#[derive(Debug, Clone, Copy)]
pub struct CircleDemo {
    pub n: usize,
    pub log_eta: f64,
    /// `g_1(e^{log_eta}) / (g_1(e^{log_eta}) + 8 n ln n)`, the closed-form
    /// bound built from the per-point cost caps.
    pub closed_form_bound: f64,
    /// `g_1(e^{log_eta}) / Σ_i g_1(x_i β)` with the full summed
    /// denominator at the query `β = (1 + η, -1, 0, ...)`.
    pub summed_ratio: f64,
}

pub fn circle_sensitivity_demo(n: usize, log_eta: f64) -> Result<CircleDemo> {
    if n < 8 {
        return Err(Error::InvalidInput(format!(
            "circle demo needs n >= 8, got {n}"
        )));
    }
    if !(log_eta < 0.0) {
        return Err(Error::InvalidInput(format!(
            "circle demo expects a negative log margin, got {log_eta}"
        )));
    }
    let p = LinkPower::Id;
    let deep = point_loss_log(1, log_eta, p);
    let cap = 8.0 * n as f64 * (n as f64).ln();
    let closed_form_bound = deep / (deep + cap);

    // Exact denominator: the query touches row n at margin eta and sees
    // every other row at distance 1 + eta - cos(2*pi*i/n).
    let eta = log_eta.exp(); // may underflow to 0; only used for the far rows
    let mut denom = deep;
    for i in 1..n {
        let z = 1.0 + eta - (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos();
        denom += point_loss_unchecked(1, z, p);
    }
    Ok(CircleDemo {
        n,
        log_eta,
        closed_form_bound,
        summed_ratio: deep / denom,
    })
}
