//! ℓp-well-conditioned representations of the design column span and the
//! per-row sensitivity upper bounds they induce.
//!
//! For p=2 the basis is sketch-then-QR: a sparse sign embedding with
//! `O(d²)` rows followed by `Q = X R^{-1}`, giving distortion close to
//! `(sqrt(2d), sqrt(2))`. For p=1 the same QR route serves as a surrogate
//! with columns rescaled to unit ℓ1 norm and the distortion *measured*
//! rather than assumed; an optional Lewis-weight-style reweighting
//! refines it. Sensitivity scores are `s_i = ||Q_i||_p^p + 1/n`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::model::{Dataset, LinkPower};
use crate::optimizer::{feasible_start, minimize, random_feasible_params, OptimizerConfig};
use crate::{Error, Result};

/// Conditioned representation `Q` of the span of the rows, with its
/// measured norm bound `alpha` and distortion bound `gamma`.
#[derive(Debug, Clone)]
pub struct ConditionedBasis {
    pub q: DMatrix<f64>,
    /// Measured `||Q||_p`.
    pub alpha: f64,
    /// Measured distortion: max over probes of `||z||_q / ||Qz||_p`.
    pub gamma: f64,
    pub p: LinkPower,
}

/// Knobs for basis construction.
#[derive(Debug, Clone)]
pub struct ConditioningConfig {
    /// Sketch row count is `sketch_factor * d^2`.
    pub sketch_factor: usize,
    /// Random probes used to measure distortion.
    pub probes: usize,
    /// Enable the iterative reweighting refinement for p=1.
    pub refine_l1: bool,
    pub seed: u64,
}

impl Default for ConditioningConfig {
    fn default() -> Self {
        ConditioningConfig {
            sketch_factor: 4,
            probes: 1000,
            refine_l1: false,
            seed: 0,
        }
    }
}

/// Per-row sensitivity upper bounds, their total, and the induced
/// sampling distribution.
#[derive(Debug, Clone)]
pub struct SensitivityScores {
    pub scores: Vec<f64>,
    pub total: f64,
    pub probabilities: Vec<f64>,
}

impl SensitivityScores {
    /// CSV with columns `row_index,score,probability`.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::from("row_index,score,probability\n");
        for (i, (s, p)) in self.scores.iter().zip(&self.probabilities).enumerate() {
            let _ = writeln!(out, "{i},{s},{p}");
        }
        out
    }
}

fn qr_from_sketch(rows: &DMatrix<f64>, cfg: &ConditioningConfig) -> Result<DMatrix<f64>> {
    let n = rows.nrows();
    let d = rows.ncols();
    let m = (cfg.sketch_factor * d * d).max(d + 1);
    for attempt in 0..3 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(0x5ce7c4 + attempt as u64);
        // Sparse sign embedding: every input row lands in one bucket with
        // a random sign.
        let mut sketch: DMatrix<f64> = DMatrix::zeros(m, d);
        for i in 0..n {
            let bucket = rng.gen_range(0..m);
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            for j in 0..d {
                sketch[(bucket, j)] += sign * rows[(i, j)];
            }
        }
        let qr = sketch.qr();
        let r = qr.r();
        let max_diag = (0..d).map(|j| r[(j, j)].abs()).fold(0.0f64, f64::max);
        let rank_ok = (0..d).all(|j| r[(j, j)].abs() > 1e-12 * max_diag.max(1e-300));
        if !rank_ok {
            continue;
        }
        let r_inv = r
            .try_inverse()
            .ok_or(Error::RankDeficient { attempts: attempt + 1 })?;
        return Ok(rows * r_inv);
    }
    Err(Error::RankDeficient { attempts: 3 })
}

fn unit_probes(d: usize, count: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0x97_0b_e5);
    let mut probes = Vec::with_capacity(count + d);
    for j in 0..d {
        let mut e = DVector::zeros(d);
        e[j] = 1.0;
        probes.push(e);
    }
    while probes.len() < count + d {
        let v = DVector::from_fn(d, |_, _| {
            let g: f64 = StandardNormal.sample(&mut rng);
            g
        });
        let norm = v.norm();
        if norm > 1e-12 {
            probes.push(v / norm);
        }
    }
    probes
}

/// Sketch-QR basis for p=2: `Q = X R^{-1}` with `R` from the QR
/// factorization of the sketched matrix. Rank-deficient sketches are
/// retried with fresh seeds up to three times.
pub fn sketch_qr_basis_p2(rows: &DMatrix<f64>, cfg: &ConditioningConfig) -> Result<ConditionedBasis> {
    let q = qr_from_sketch(rows, cfg)?;
    let d = rows.ncols();
    let alpha = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut gamma = 0.0f64;
    for z in unit_probes(d, cfg.probes, cfg.seed) {
        let image = &q * &z;
        let ratio = z.norm() / image.norm().max(1e-300);
        gamma = gamma.max(ratio);
    }
    Ok(ConditionedBasis {
        q,
        alpha,
        gamma,
        p: LinkPower::Sqrt,
    })
}

/// ℓ1 surrogate basis: the sketch-QR representation with columns rescaled
/// to unit ℓ1 norm and the ℓ1→ℓ∞ distortion measured on probes. With
/// `refine_l1` set, a Lewis-weight-style fixed point reshapes the span
/// first.
pub fn l1_basis(rows: &DMatrix<f64>, cfg: &ConditioningConfig) -> Result<ConditionedBasis> {
    let d = rows.ncols();
    let mut q = if cfg.refine_l1 {
        lewis_refined(rows)?
    } else {
        qr_from_sketch(rows, cfg)?
    };
    // Unit ℓ1 columns give ||Q||_1 = d exactly.
    for j in 0..d {
        let colsum: f64 = q.column(j).iter().map(|v| v.abs()).sum();
        if colsum < 1e-300 {
            return Err(Error::RankDeficient { attempts: 1 });
        }
        q.column_mut(j).scale_mut(1.0 / colsum);
    }
    let alpha = q.iter().map(|v| v.abs()).sum::<f64>();
    let mut gamma = 0.0f64;
    for z in unit_probes(d, cfg.probes, cfg.seed) {
        let image = &q * &z;
        let l1: f64 = image.iter().map(|v| v.abs()).sum();
        let linf = z.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
        gamma = gamma.max(linf / l1.max(1e-300));
    }
    Ok(ConditionedBasis {
        q,
        alpha,
        gamma,
        p: LinkPower::Id,
    })
}

// One ℓ1 Lewis-weight fixed point: w_i <- (x_i (X^T W^{-1} X)^{-1} x_i^T)^{1/2},
// then Q = X M^{-1/2}; row 2-norms equal the converged weights.
fn lewis_refined(rows: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = rows.nrows();
    let d = rows.ncols();
    let mut w = DVector::from_element(n, 1.0);
    for _ in 0..12 {
        let mut m: DMatrix<f64> = DMatrix::zeros(d, d);
        for i in 0..n {
            let xi = rows.row(i);
            let scale = 1.0 / w[i];
            for a in 0..d {
                for b in 0..d {
                    m[(a, b)] += scale * xi[a] * xi[b];
                }
            }
        }
        let m_inv = m
            .try_inverse()
            .ok_or(Error::RankDeficient { attempts: 1 })?;
        for i in 0..n {
            let xi = rows.row(i).transpose();
            let tau = (&m_inv * &xi).dot(&xi);
            w[i] = tau.max(1e-300).sqrt().max(1e-12);
        }
    }
    let mut m: DMatrix<f64> = DMatrix::zeros(d, d);
    for i in 0..n {
        let xi = rows.row(i);
        let scale = 1.0 / w[i];
        for a in 0..d {
            for b in 0..d {
                m[(a, b)] += scale * xi[a] * xi[b];
            }
        }
    }
    let eig = m.symmetric_eigen();
    let mut inv_sqrt = DMatrix::zeros(d, d);
    for k in 0..d {
        let lambda = eig.eigenvalues[k];
        if lambda <= 0.0 {
            return Err(Error::RankDeficient { attempts: 1 });
        }
        let col = eig.eigenvectors.column(k);
        let scale = 1.0 / lambda.sqrt();
        for a in 0..d {
            for b in 0..d {
                inv_sqrt[(a, b)] += scale * col[a] * col[b];
            }
        }
    }
    Ok(rows * inv_sqrt)
}

/// Basis for either link power.
pub fn conditioned_basis(
    rows: &DMatrix<f64>,
    p: LinkPower,
    cfg: &ConditioningConfig,
) -> Result<ConditionedBasis> {
    match p {
        LinkPower::Id => l1_basis(rows, cfg),
        LinkPower::Sqrt => sketch_qr_basis_p2(rows, cfg),
    }
}

/// `s_i = ||Q_i||_p^p + 1/n` with the induced distribution `p_i = s_i/S`.
pub fn sensitivity_scores(basis: &ConditionedBasis) -> SensitivityScores {
    let n = basis.q.nrows();
    let floor = 1.0 / n as f64;
    let scores: Vec<f64> = (0..n)
        .map(|i| {
            let row = basis.q.row(i);
            let norm_p = match basis.p {
                LinkPower::Id => row.iter().map(|v| v.abs()).sum::<f64>(),
                LinkPower::Sqrt => row.iter().map(|v| v * v).sum::<f64>(),
            };
            norm_p + floor
        })
        .collect();
    let total: f64 = scores.iter().sum();
    let probabilities = scores.iter().map(|s| s / total).collect();
    SensitivityScores {
        scores,
        total,
        probabilities,
    }
}

/// Certified lower-bound estimate of the complexity parameter
/// `ρ = sup_β Σ|x_j β|^p / Σ|x_j β - y_j^{1/p}|^p`, maximized over random
/// feasible parameters plus the optimizer's solution. Reported as a lower
/// bound, never as the supremum.
pub fn rho_estimate(data: &Dataset, p: LinkPower, trials: usize, seed: u64) -> Result<f64> {
    let rows = data.design();
    let base = feasible_start(rows, 0.0).ok_or(Error::Infeasible(0.0))?;
    let mut candidates: Vec<DVector<f64>> = vec![base.clone()];
    if let Ok(fit) = minimize(
        rows,
        data.labels(),
        None,
        p,
        &OptimizerConfig::with_eta(1e-9),
        &[],
    ) {
        candidates.push(fit.beta);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..trials {
        rng.set_stream(trial as u64);
        candidates.push(random_feasible_params(rows, &base, 0.0, &mut rng));
    }

    let mut estimate = 0.0f64;
    for beta in &candidates {
        let z = rows * beta;
        if z.iter().any(|&v| v <= 0.0) {
            continue;
        }
        let mut numer = 0.0;
        let mut denom = 0.0;
        for (i, &y) in data.labels().iter().enumerate() {
            numer += p.pow(z[i].abs());
            denom += p.pow((z[i] - p.root(y as f64)).abs());
        }
        if denom > 0.0 {
            estimate = estimate.max(numer / denom);
        }
    }
    Ok(estimate)
}

/// Informational coreset size from the sampling theorem,
/// `k = (S/ε²)(Δ ln S + ln(1/δ))` with the total-sensitivity and
/// VC-dimension expressions for the given link power (constants taken as
/// 1; the sampler takes `k` directly from the caller).
pub fn theoretical_coreset_size(
    eps: f64,
    delta: f64,
    rho_hat: f64,
    y_max: u64,
    d: usize,
    n: usize,
    p: LinkPower,
) -> f64 {
    let df = d as f64;
    let nf = n as f64;
    let ymax = (y_max.max(2)) as f64;
    let total_sensitivity = match p {
        LinkPower::Id => rho_hat * df * (ymax / ymax.ln()).sqrt() + (1.0 / eps).ln().max(1.0).ln().max(1.0),
        LinkPower::Sqrt => rho_hat * df + ymax.ln() + (1.0 / eps).ln().max(1.0).ln().max(1.0),
    };
    let vc = df * (df).min(nf.ln() * ymax.ln() / eps);
    total_sensitivity / (eps * eps) * (vc * total_sensitivity.ln().max(1.0) + (1.0 / delta).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::generate_f2;
    use crate::envelopes::lambda_p1;
    use crate::model::{point_loss_unchecked, weighted_loss};
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;

    fn identity_data(d: usize) -> DMatrix<f64> {
        DMatrix::identity(d, d)
    }

    #[test]
    fn p2_basis_on_identity() {
        let rows = identity_data(5);
        let basis = sketch_qr_basis_p2(&rows, &ConditioningConfig::default()).unwrap();
        // Frobenius norm within [sqrt(d/2), sqrt(2d)].
        assert!(basis.alpha >= (5.0f64 / 2.0).sqrt() && basis.alpha <= 10.0f64.sqrt());
        assert!(basis.gamma >= 1.0 / 2.0f64.sqrt() && basis.gamma <= 2.0f64.sqrt() + 0.05);
    }

    #[test]
    fn p2_distortion_within_embedding_budget() {
        let (data, _) = generate_f2(500, 4, LinkPower::Sqrt, 77).unwrap();
        let basis = sketch_qr_basis_p2(data.design(), &ConditioningConfig::default()).unwrap();
        let mut min_ratio = f64::INFINITY;
        let mut max_ratio = 0.0f64;
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        for _ in 0..1000 {
            let z = DVector::from_fn(4, |_, _| {
                let g: f64 = StandardNormal.sample(&mut rng);
                g
            });
            let ratio = (&basis.q * &z).norm() / z.norm();
            min_ratio = min_ratio.min(ratio);
            max_ratio = max_ratio.max(ratio);
        }
        assert!(
            max_ratio / min_ratio <= 2.05,
            "distortion ratio {}",
            max_ratio / min_ratio
        );
        assert!(min_ratio >= 1.0 / 2.0f64.sqrt() - 0.05);
        assert!(max_ratio <= 2.0f64.sqrt() + 0.05);
    }

    #[test]
    fn rank_deficient_rows_rejected() {
        // Zero third column: no sketch seed can fix a genuine rank gap.
        let rows = dmatrix![1.0, 0.5, 0.0; 1.0, -0.5, 0.0; 1.0, 0.25, 0.0; 1.0, 0.1, 0.0];
        match sketch_qr_basis_p2(&rows, &ConditioningConfig::default()) {
            Err(Error::RankDeficient { attempts }) => assert_eq!(attempts, 3),
            other => panic!("expected rank error, got {other:?}"),
        }
    }

    #[test]
    fn l1_identity_columns_unit_norm() {
        let rows = identity_data(4);
        let basis = l1_basis(&rows, &ConditioningConfig::default()).unwrap();
        assert_relative_eq!(basis.alpha, 4.0, max_relative = 1e-12);
        for j in 0..4 {
            let colsum: f64 = basis.q.column(j).iter().map(|v| v.abs()).sum();
            assert_relative_eq!(colsum, 1.0, max_relative = 1e-12);
        }
        assert!(basis.gamma >= 1.0);
    }

    #[test]
    fn l1_gamma_at_least_one_on_real_data() {
        let (data, _) = generate_f2(300, 4, LinkPower::Id, 5).unwrap();
        for refine in [false, true] {
            let cfg = ConditioningConfig {
                refine_l1: refine,
                ..Default::default()
            };
            let basis = l1_basis(data.design(), &cfg).unwrap();
            assert!(basis.gamma >= 1.0, "measured gamma {}", basis.gamma);
            assert_relative_eq!(basis.alpha, 4.0, max_relative = 1e-9);
        }
    }

    #[test]
    fn scores_floor_and_distribution() {
        let rows = identity_data(6);
        let basis = sketch_qr_basis_p2(&rows, &ConditioningConfig::default()).unwrap();
        let scores = sensitivity_scores(&basis);
        let sum_p: f64 = scores.probabilities.iter().sum();
        assert!((sum_p - 1.0).abs() <= 1e-12);
        assert!(scores.scores.iter().all(|&s| s >= 1.0 / 6.0));
        // Identity design: symmetric scores, uniform distribution.
        for &p in &scores.probabilities {
            assert_relative_eq!(p, 1.0 / 6.0, max_relative = 1e-9);
        }
        // S = ||Q||_F^2 + 1 for p=2.
        assert_relative_eq!(
            scores.total,
            basis.alpha * basis.alpha + 1.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn zero_row_gets_floor_only() {
        let basis = ConditionedBasis {
            q: dmatrix![0.0, 0.0; 1.0, 2.0],
            alpha: 0.0,
            gamma: 1.0,
            p: LinkPower::Id,
        };
        let scores = sensitivity_scores(&basis);
        assert_relative_eq!(scores.scores[0], 0.5, max_relative = 1e-15);
    }

    #[test]
    fn scores_deterministic() {
        let (data, _) = generate_f2(200, 4, LinkPower::Sqrt, 55).unwrap();
        let cfg = ConditioningConfig::default();
        let a = sensitivity_scores(&sketch_qr_basis_p2(data.design(), &cfg).unwrap());
        let b = sensitivity_scores(&sketch_qr_basis_p2(data.design(), &cfg).unwrap());
        assert_eq!(a.scores, b.scores);
    }

    #[test]
    fn rho_estimate_basics() {
        // All-zero labels: numerator equals denominator for every β.
        let (data, _) = generate_f2(60, 4, LinkPower::Id, 2).unwrap();
        let zeroed = Dataset::from_features(
            DMatrix::from_fn(60, 3, |i, j| data.design()[(i, j + 1)]),
            vec![0; 60],
        )
        .unwrap();
        let rho = rho_estimate(&zeroed, LinkPower::Id, 10, 1).unwrap();
        assert_relative_eq!(rho, 1.0, max_relative = 1e-9);

        // Running maximum is monotone in the trial count.
        let r5 = rho_estimate(&data, LinkPower::Id, 5, 9).unwrap();
        let r20 = rho_estimate(&data, LinkPower::Id, 20, 9).unwrap();
        assert!(r20 >= r5);
        assert!(r20.is_finite());
    }

    #[test]
    fn sensitivity_dominance_small_instance() {
        // Grid supremum of the true sensitivity is a lower bound on the
        // sup; it must stay below the scaled score for nearly all rows.
        let p = LinkPower::Id;
        let (data, _) = generate_f2(40, 3, p, 21).unwrap();
        let eta = 0.05;
        let hull = crate::hull::extreme_points_exact(&data, &crate::hull::HullBudget::default())
            .unwrap();
        let remainder: Vec<usize> =
            (0..data.n()).filter(|i| !hull.indices.contains(i)).collect();
        let (rows, labels) = data.select_rows(&remainder);
        let basis = l1_basis(&rows, &ConditioningConfig::default()).unwrap();
        let scores = sensitivity_scores(&basis);

        let base = feasible_start(data.design(), eta).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let betas: Vec<DVector<f64>> = (0..200)
            .map(|_| random_feasible_params(data.design(), &base, eta, &mut rng))
            .collect();

        let rho = rho_estimate(&data, p, 50, 4).unwrap();
        let lambda = lambda_p1(data.y_max().max(1));
        let factor = lambda * rho * basis.gamma.powi(p.p_int() as i32);

        let mut dominated = 0usize;
        for (pos, _) in remainder.iter().enumerate() {
            let mut true_sens = 0.0f64;
            for beta in &betas {
                let z = rows.row(pos) * beta;
                let g = point_loss_unchecked(labels[pos], z[0], p);
                let f = weighted_loss(data.design(), data.labels(), None, beta, p)
                    .unwrap()
                    .value()
                    .unwrap();
                true_sens = true_sens.max(g / f);
            }
            let bound = factor * (scores.scores[pos] - 1.0 / rows.nrows() as f64)
                + 2.0 / rows.nrows() as f64;
            if true_sens <= bound {
                dominated += 1;
            }
        }
        let frac = dominated as f64 / remainder.len() as f64;
        assert!(frac >= 0.95, "only {frac} of rows dominated");
    }

    #[test]
    fn theoretical_size_is_informational() {
        let k1 = theoretical_coreset_size(0.1, 0.1, 2.0, 100, 4, 10_000, LinkPower::Id);
        let k2 = theoretical_coreset_size(0.1, 0.1, 2.0, 100, 4, 10_000, LinkPower::Sqrt);
        assert!(k1 > 0.0 && k2 > 0.0);
        // The square-root link has the milder y_max dependence.
        assert!(k2 < k1);
    }
}
