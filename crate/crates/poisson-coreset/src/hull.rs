//! Convex hull handling: unit-ball normalization, exact extreme points,
//! and ε-kernel extent approximation.
//!
//! The optimizer's feasibility margin is anchored on hull rows, so the
//! coreset must carry either the exact extreme points or a kernel whose
//! directional extent is within an additive `O(ε)` of the full set. Exact
//! mode decides membership per candidate row with a small feasibility LP;
//! kernel mode takes the argmax row along a deterministic direction net
//! with angular spacing `sqrt(ε)`.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::model::Dataset;
use crate::{Error, Result};

/// How the hull subset was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum HullMode {
    Exact,
    EpsKernel,
}

/// Row indices the coreset must retain at weight 1.
#[derive(Debug, Clone, PartialEq)]
pub struct HullResult {
    /// Sorted, deduplicated row indices into the originating dataset.
    pub indices: Vec<usize>,
    pub mode: HullMode,
    /// Kernel parameter; 0 for exact mode.
    pub eps: f64,
    /// Unit-ball normalization constant applied to the data the hull was
    /// computed on (1 when the data was already inside the ball).
    pub scale_factor: f64,
}

/// Work budget for the per-candidate LP sweep.
#[derive(Debug, Clone, Copy)]
pub struct HullBudget {
    /// Exact mode is allowed when the row count stays below this...
    pub max_rows: usize,
    /// ...or the total column count (intercept included) is at most this.
    pub small_d: usize,
}

impl Default for HullBudget {
    fn default() -> Self {
        HullBudget {
            max_rows: 10_000,
            small_d: 3,
        }
    }
}

/// Cap on the direction net size.
pub const MAX_NET_DIRECTIONS: usize = 8192;

/// Divide all covariates by `c = max(1, max_i ||features_i||_2)` so every
/// feature row lies in the unit ball. Returns the scaled dataset and `c`.
pub fn normalize_unit_ball(data: &Dataset) -> (Dataset, f64) {
    let mut max_norm = 0.0f64;
    for i in 0..data.n() {
        max_norm = max_norm.max(data.feature_row(i).norm());
    }
    let c = max_norm.max(1.0);
    (data.scaled_features(c), c)
}

/// Margin the optimizer must enforce on hull rows: `ε` when the hull is
/// exact, `2ε` when it is a kernel (the kernel boundary can be up to `ε`
/// inside the true hull).
pub fn constraint_margin(hull: &HullResult, eps: f64) -> f64 {
    match hull.mode {
        HullMode::Exact => eps,
        HullMode::EpsKernel => 2.0 * eps,
    }
}

impl HullResult {
    /// One-column CSV of the retained row indices.
    pub fn indices_csv(&self) -> String {
        let mut out = String::from("row_index\n");
        for &i in &self.indices {
            out.push_str(&format!("{i}\n"));
        }
        out
    }
}

/// Exact extreme points: a row is kept iff it is not a convex combination
/// of the other rows, decided by a Phase-I feasibility LP per candidate.
/// Exact duplicates are represented by their first occurrence.
pub fn extreme_points_exact(data: &Dataset, budget: &HullBudget) -> Result<HullResult> {
    let n = data.n();
    let d = data.d();
    if n > budget.max_rows && d > budget.small_d {
        return Err(Error::HullBudgetExceeded { n, d });
    }

    // Deduplicate bitwise-identical rows; the representative keeps the
    // geometry (and the feasibility constraints) intact.
    let mut unique: Vec<usize> = Vec::new();
    let mut seen: std::collections::HashSet<Vec<u64>> = std::collections::HashSet::new();
    for i in 0..n {
        let key: Vec<u64> = data.design().row(i).iter().map(|v| v.to_bits()).collect();
        if seen.insert(key) {
            unique.push(i);
        }
    }

    let mut indices = Vec::new();
    for (pos, &candidate) in unique.iter().enumerate() {
        let others: Vec<usize> = unique
            .iter()
            .enumerate()
            .filter(|&(q, _)| q != pos)
            .map(|(_, &r)| r)
            .collect();
        if others.is_empty() {
            indices.push(candidate);
            continue;
        }
        // The intercept coordinate of every row is 1, so equality over all
        // d coordinates already enforces that the weights sum to 1.
        let mut columns = DMatrix::zeros(d, others.len());
        for (j, &r) in others.iter().enumerate() {
            for a in 0..d {
                columns[(a, j)] = data.design()[(r, a)];
            }
        }
        let target: Vec<f64> = data.design().row(candidate).iter().copied().collect();
        if !lp::feasible(&columns, &target, 1e-8)? {
            indices.push(candidate);
        }
    }
    indices.sort_unstable();
    Ok(HullResult {
        indices,
        mode: HullMode::Exact,
        eps: 0.0,
        scale_factor: 1.0,
    })
}

/// ε-kernel on unit-ball-normalized data: the argmax row per direction of
/// a deterministic sphere net with angular spacing `sqrt(ε)` (capped at
/// [`MAX_NET_DIRECTIONS`]). Extents along any direction are preserved up
/// to an additive `O(ε)`.
pub fn eps_kernel(data: &Dataset, eps: f64) -> Result<HullResult> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::InvalidInput(format!("eps = {eps} outside (0, 1/2)")));
    }
    let df = data.d() - 1;
    for i in 0..data.n() {
        if data.feature_row(i).norm() > 1.0 + 1e-9 {
            return Err(Error::InvalidInput(
                "eps_kernel expects unit-ball-normalized data".into(),
            ));
        }
    }
    let directions = direction_net(df, eps);
    let mut chosen = std::collections::BTreeSet::new();
    for dir in &directions {
        let mut best = (f64::NEG_INFINITY, 0usize);
        for i in 0..data.n() {
            let mut dot = 0.0;
            for j in 0..df {
                dot += dir[j] * data.design()[(i, j + 1)];
            }
            if dot > best.0 {
                best = (dot, i);
            }
        }
        chosen.insert(best.1);
    }
    Ok(HullResult {
        indices: chosen.into_iter().collect(),
        mode: HullMode::EpsKernel,
        eps,
        scale_factor: 1.0,
    })
}

/// Exact hull when the budget allows it, kernel otherwise.
pub fn auto_hull(data: &Dataset, eps: f64, budget: &HullBudget) -> Result<HullResult> {
    match extreme_points_exact(data, budget) {
        Ok(hull) => Ok(hull),
        Err(Error::HullBudgetExceeded { .. }) => eps_kernel(data, eps),
        Err(e) => Err(e),
    }
}

fn direction_net(df: usize, eps: f64) -> Vec<Vec<f64>> {
    let spacing = eps.sqrt();
    match df {
        0 => vec![],
        1 => vec![vec![1.0], vec![-1.0]],
        2 => {
            let m = ((2.0 * std::f64::consts::PI / spacing).ceil() as usize)
                .clamp(4, MAX_NET_DIRECTIONS);
            (0..m)
                .map(|k| {
                    let angle = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                    vec![angle.cos(), angle.sin()]
                })
                .collect()
        }
        3 => {
            // Fibonacci sphere; covering radius is about 3.4/sqrt(M).
            let m = ((12.0 / eps).ceil() as usize).clamp(8, MAX_NET_DIRECTIONS);
            let golden = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
            (0..m)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / m as f64;
                    let r = (1.0 - z * z).sqrt();
                    let phi = golden * k as f64;
                    vec![r * phi.cos(), r * phi.sin(), z]
                })
                .collect()
        }
        _ => {
            // Above three feature dimensions a structured product net is
            // no longer practical at the cap, so fill the budget with a
            // fixed-seed isotropic sample plus the coordinate directions.
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_ba11);
            let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(MAX_NET_DIRECTIONS);
            for j in 0..df {
                let mut plus = vec![0.0; df];
                plus[j] = 1.0;
                let mut minus = vec![0.0; df];
                minus[j] = -1.0;
                dirs.push(plus);
                dirs.push(minus);
            }
            while dirs.len() < MAX_NET_DIRECTIONS {
                let mut v: Vec<f64> = (0..df).map(|_| StandardNormal.sample(&mut rng)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm < 1e-12 {
                    continue;
                }
                v.iter_mut().for_each(|x| *x /= norm);
                dirs.push(v);
            }
            dirs
        }
    }
}

mod lp {
    //! Dense Phase-I simplex for small feasibility systems
    //! `A x = b, x >= 0` with Bland's rule.

    use crate::{Error, Result};
    use nalgebra::DMatrix;

    /// Does `columns * theta = target` admit a nonnegative solution?
    pub(crate) fn feasible(columns: &DMatrix<f64>, target: &[f64], tol: f64) -> Result<bool> {
        let rows = columns.nrows();
        let vars = columns.ncols();
        assert_eq!(rows, target.len());

        // Tableau [A | I | b] with artificial basis; flip rows so b >= 0.
        let width = vars + rows + 1;
        let mut t = vec![vec![0.0f64; width]; rows + 1];
        for r in 0..rows {
            let sign = if target[r] < 0.0 { -1.0 } else { 1.0 };
            for j in 0..vars {
                t[r][j] = sign * columns[(r, j)];
            }
            t[r][vars + r] = 1.0;
            t[r][width - 1] = sign * target[r];
        }
        // Reduced-cost row for min sum(artificials): subtract each
        // constraint row since every artificial starts basic at cost 1;
        // the basic artificial columns themselves carry zero reduced cost.
        for j in 0..width {
            let mut s = 0.0;
            for r in 0..rows {
                s += t[r][j];
            }
            t[rows][j] = -s;
        }
        for r in 0..rows {
            t[rows][vars + r] = 0.0;
        }

        let mut basis: Vec<usize> = (vars..vars + rows).collect();
        let max_pivots = 200 * (vars + rows + 1);
        for _ in 0..max_pivots {
            // Bland: smallest column index with negative reduced cost.
            let entering = (0..width - 1).find(|&j| t[rows][j] < -1e-11);
            let Some(e) = entering else {
                let objective = -t[rows][width - 1];
                return Ok(objective <= tol * (1.0 + target.iter().map(|v| v.abs()).sum::<f64>()));
            };
            // Ratio test, Bland tie-break on the leaving basis index.
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..rows {
                if t[r][e] > 1e-11 {
                    let ratio = t[r][width - 1] / t[r][e];
                    match leave {
                        None => leave = Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - 1e-12
                                || ((ratio - lratio).abs() <= 1e-12 && basis[r] < basis[lr])
                            {
                                leave = Some((r, ratio));
                            }
                        }
                    }
                }
            }
            let Some((l, _)) = leave else {
                // Unbounded phase-I objective cannot happen; treat as
                // numerically feasible-unknown.
                return Err(Error::InvalidInput(
                    "phase-I simplex ratio test found no pivot".into(),
                ));
            };
            // Pivot on (l, e).
            let pivot = t[l][e];
            for j in 0..width {
                t[l][j] /= pivot;
            }
            for r in 0..rows + 1 {
                if r != l {
                    let factor = t[r][e];
                    if factor != 0.0 {
                        for j in 0..width {
                            t[r][j] -= factor * t[l][j];
                        }
                    }
                }
            }
            basis[l] = e;
        }
        Err(Error::InvalidInput(
            "phase-I simplex exceeded its pivot budget".into(),
        ))
    }

}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate_circle, generate_f2};
    use crate::model::LinkPower;
    use nalgebra::dmatrix;
    use rand::{Rng, SeedableRng};

    #[test]
    fn normalize_examples() {
        let data = Dataset::from_features(dmatrix![0.0, 0.0; 0.0, 0.0], vec![1, 2]).unwrap();
        let (scaled, c) = normalize_unit_ball(&data);
        assert_eq!(c, 1.0);
        assert_eq!(scaled, data);

        let data = Dataset::from_features(dmatrix![3.0, 4.0], vec![1]).unwrap();
        let (scaled, c) = normalize_unit_ball(&data);
        assert_eq!(c, 5.0);
        assert!((scaled.feature_row(0).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_points_two_endpoints() {
        let data =
            Dataset::from_features(dmatrix![0.0; 0.5; 1.0], vec![1, 1, 1]).unwrap();
        let hull = extreme_points_exact(&data, &HullBudget::default()).unwrap();
        assert_eq!(hull.indices, vec![0, 2]);
    }

    #[test]
    fn simplex_vertices_are_the_hull() {
        let (data, _) = generate_f2(60, 4, LinkPower::Id, 3).unwrap();
        let hull = extreme_points_exact(&data, &HullBudget::default()).unwrap();
        assert_eq!(hull.indices, vec![0, 1, 2, 3]);
    }

    #[test]
    fn circle_rows_all_extreme() {
        let data = generate_circle(16, 3, 0).unwrap();
        let hull = extreme_points_exact(&data, &HullBudget::default()).unwrap();
        assert_eq!(hull.indices, (0..16).collect::<Vec<_>>());
    }

    #[test]
    fn exact_mode_is_idempotent() {
        let (data, _) = generate_f2(40, 4, LinkPower::Sqrt, 5).unwrap();
        let hull = extreme_points_exact(&data, &HullBudget::default()).unwrap();
        let (rows, labels) = data.select_rows(&hull.indices);
        let subset = Dataset::from_design(rows, labels).unwrap();
        let again = extreme_points_exact(&subset, &HullBudget::default()).unwrap();
        assert_eq!(again.indices, (0..hull.indices.len()).collect::<Vec<_>>());
    }

    #[test]
    fn budget_exceeded_suggests_kernel() {
        let (data, _) = generate_f2(600, 5, LinkPower::Id, 8).unwrap();
        let budget = HullBudget {
            max_rows: 100,
            small_d: 3,
        };
        match extreme_points_exact(&data, &budget) {
            Err(Error::HullBudgetExceeded { n, d }) => {
                assert_eq!(n, 600);
                assert_eq!(d, 5);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
        let hull = auto_hull(&data, 0.05, &budget).unwrap();
        assert_eq!(hull.mode, HullMode::EpsKernel);
    }

    #[test]
    fn kernel_on_interval_is_exact() {
        let data = Dataset::from_features(
            dmatrix![-0.8; 0.2; 0.9; 0.1],
            vec![1, 1, 1, 1],
        )
        .unwrap();
        let hull = eps_kernel(&data, 0.1).unwrap();
        assert_eq!(hull.indices, vec![0, 2]);
    }

    #[test]
    fn kernel_subset_of_exact_on_circle() {
        let data = generate_circle(64, 3, 0).unwrap();
        let exact = extreme_points_exact(&data, &HullBudget::default()).unwrap();
        let mut last_len = usize::MAX;
        for &eps in &[0.4, 0.1, 0.02] {
            let kernel = eps_kernel(&data, eps).unwrap();
            assert!(kernel
                .indices
                .iter()
                .all(|i| exact.indices.contains(i)));
            // Finer kernels keep at least as many points.
            assert!(kernel.indices.len() <= last_len.max(kernel.indices.len()));
            last_len = kernel.indices.len();
        }
        let coarse = eps_kernel(&data, 0.4).unwrap().indices.len();
        let fine = eps_kernel(&data, 0.02).unwrap().indices.len();
        assert!(fine > coarse, "kernel should grow as eps shrinks");
    }

    #[test]
    fn kernel_recovers_simplex_vertices() {
        let (data, _) = generate_f2(300, 4, LinkPower::Id, 11).unwrap();
        let hull = eps_kernel(&data, 0.02).unwrap();
        assert_eq!(hull.indices, vec![0, 1, 2, 3]);
    }

    #[test]
    fn kernel_requires_normalized_data() {
        let data = Dataset::from_features(dmatrix![5.0, 0.0], vec![1]).unwrap();
        assert!(eps_kernel(&data, 0.1).is_err());
        assert!(eps_kernel(&normalize_unit_ball(&data).0, 0.1).is_ok());
    }

    #[test]
    fn directional_extent_preserved() {
        let data = generate_circle(128, 3, 0).unwrap();
        let eps = 0.05;
        let kernel = eps_kernel(&data, eps).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let raw: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = (raw[0] * raw[0] + raw[1] * raw[1]).sqrt();
            if norm < 1e-9 {
                continue;
            }
            let u = [raw[0] / norm, raw[1] / norm];
            let extent = |rows: &[usize]| -> f64 {
                rows.iter()
                    .map(|&i| u[0] * data.design()[(i, 1)] + u[1] * data.design()[(i, 2)])
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            let full: Vec<usize> = (0..data.n()).collect();
            let gap = extent(&full) - extent(&kernel.indices);
            assert!(gap <= 2.0 * eps, "extent gap {gap} exceeds 2 eps");
        }
    }

    #[test]
    fn margin_rule() {
        let exact = HullResult {
            indices: vec![0],
            mode: HullMode::Exact,
            eps: 0.0,
            scale_factor: 1.0,
        };
        let kernel = HullResult {
            indices: vec![0],
            mode: HullMode::EpsKernel,
            eps: 0.1,
            scale_factor: 1.0,
        };
        assert_eq!(constraint_margin(&exact, 0.1), 0.1);
        assert_eq!(constraint_margin(&kernel, 0.1), 0.2);
    }

    #[test]
    fn duplicate_rows_keep_one_representative() {
        let data = Dataset::from_features(
            dmatrix![0.0; 1.0; 1.0; 0.25],
            vec![1, 2, 3, 4],
        )
        .unwrap();
        let hull = extreme_points_exact(&data, &HullBudget::default()).unwrap();
        assert_eq!(hull.indices, vec![0, 1]);
    }

    #[test]
    fn high_dimensional_net_is_deterministic() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let feats = DMatrix::from_fn(50, 5, |_, _| rng.gen_range(-0.4..0.4));
        let data = Dataset::from_features(feats, vec![1; 50]).unwrap();
        let a = eps_kernel(&data, 0.2).unwrap();
        let b = eps_kernel(&data, 0.2).unwrap();
        assert_eq!(a.indices, b.indices);
        // Kernel rows achieve the coordinate-direction extents exactly.
        for j in 0..5 {
            let best_full = (0..50)
                .map(|i| data.design()[(i, j + 1)])
                .fold(f64::NEG_INFINITY, f64::max);
            let best_kernel = a
                .indices
                .iter()
                .map(|&i| data.design()[(i, j + 1)])
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(best_full, best_kernel);
        }
    }
}
