//! Coreset assembly: hull rows at weight 1 concatenated with a
//! sensitivity-weighted i.i.d. sample of the remaining rows, plus the
//! uniform-sampling baseline.
//!
//! Sampling is with replacement; duplicates stay as separate weighted
//! rows. A row drawn with probability `p_i` carries weight `1/(k p_i)`,
//! which makes the weighted coreset loss an unbiased estimator of the
//! remainder loss for any fixed feasible parameter vector.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::conditioning::SensitivityScores;
use crate::hull::HullResult;
use crate::model::{weighted_loss, Dataset, LinkPower, Loss, Params};
use crate::{Error, Result};

/// Reduced dataset: `hull_count` leading weight-1 hull rows followed by
/// `k` sampled rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Coreset {
    pub rows: DMatrix<f64>,
    pub labels: Vec<u64>,
    pub weights: Vec<f64>,
    pub hull_count: usize,
    pub seed: u64,
    pub k: usize,
}

impl Coreset {
    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }

    /// Indices of the hull rows inside the coreset (the leading block).
    pub fn hull_indices(&self) -> Vec<usize> {
        (0..self.hull_count).collect()
    }

    /// Weighted loss `f_w(Cβ)`.
    pub fn loss(&self, beta: &Params, p: LinkPower) -> Result<Loss> {
        weighted_loss(&self.rows, &self.labels, Some(&self.weights), beta, p)
    }

    /// CSV with a `# hull_count=<m> seed=<s> k=<k>` comment line, header
    /// `w,f1,...,f{d-1},y`, and one row per kept observation.
    pub fn to_csv(&self) -> String {
        let d = self.rows.ncols();
        let mut out = format!(
            "# hull_count={} seed={} k={}\n",
            self.hull_count, self.seed, self.k
        );
        out.push('w');
        for j in 1..d {
            let _ = write!(out, ",f{j}");
        }
        out.push_str(",y\n");
        for i in 0..self.len() {
            let _ = write!(out, "{}", self.weights[i]);
            for j in 1..d {
                let _ = write!(out, ",{}", self.rows[(i, j)]);
            }
            let _ = writeln!(out, ",{}", self.labels[i]);
        }
        out
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn from_csv(text: &str) -> Result<Coreset> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let comment = lines
            .next()
            .ok_or_else(|| Error::Parse("empty coreset file".into()))?;
        let meta = comment
            .strip_prefix('#')
            .ok_or_else(|| Error::Parse("missing '# hull_count=...' comment header".into()))?;
        let mut hull_count = None;
        let mut seed = None;
        let mut k = None;
        for token in meta.split_whitespace() {
            if let Some((key, value)) = token.split_once('=') {
                match key {
                    "hull_count" => hull_count = value.parse::<usize>().ok(),
                    "seed" => seed = value.parse::<u64>().ok(),
                    "k" => k = value.parse::<usize>().ok(),
                    _ => {}
                }
            }
        }
        let (Some(hull_count), Some(seed), Some(k)) = (hull_count, seed, k) else {
            return Err(Error::Parse(format!("bad coreset comment header '{comment}'")));
        };
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("coreset file has no column header".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.first() != Some(&"w") || cols.last() != Some(&"y") || cols.len() < 3 {
            return Err(Error::Parse(format!(
                "expected header 'w,f1,...,f{{d-1}},y', got '{header}'"
            )));
        }
        let d = cols.len() - 1; // intercept replaces the weight column
        let mut weights = Vec::new();
        let mut labels = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != cols.len() {
                return Err(Error::Parse(format!(
                    "coreset row {}: expected {} fields, got {}",
                    lineno + 3,
                    cols.len(),
                    fields.len()
                )));
            }
            let w: f64 = fields[0]
                .parse()
                .map_err(|_| Error::Parse(format!("bad weight '{}'", fields[0])))?;
            weights.push(w);
            values.push(1.0);
            for f in &fields[1..cols.len() - 1] {
                values.push(
                    f.parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad real '{f}'")))?,
                );
            }
            labels.push(
                fields[cols.len() - 1]
                    .parse::<u64>()
                    .map_err(|_| Error::Parse(format!("bad label '{}'", fields[cols.len() - 1])))?,
            );
        }
        let n = labels.len();
        let rows = DMatrix::from_row_slice(n, d, &values);
        Ok(Coreset {
            rows,
            labels,
            weights,
            hull_count,
            seed,
            k,
        })
    }

    pub fn load_csv(path: &Path) -> Result<Coreset> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

/// Row indices of `data` outside the hull, in their original order.
pub fn remainder_indices(n: usize, hull: &HullResult) -> Vec<usize> {
    let in_hull: std::collections::HashSet<usize> = hull.indices.iter().copied().collect();
    (0..n).filter(|i| !in_hull.contains(i)).collect()
}

/// Sensitivity-sampled coreset: hull rows at weight 1 plus `k` i.i.d.
/// draws from the remainder with probability `p_i` and weight
/// `1/(k p_i)`. `scores` must be computed on the remainder (data minus
/// hull rows), aligned with [`remainder_indices`] order.
pub fn build_coreset(
    data: &Dataset,
    k: usize,
    seed: u64,
    hull: &HullResult,
    scores: &SensitivityScores,
) -> Result<Coreset> {
    if k == 0 {
        return Err(Error::InvalidInput("coreset sample size k must be >= 1".into()));
    }
    let remainder = remainder_indices(data.n(), hull);
    if scores.probabilities.len() != remainder.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} scores vs {} remainder rows",
            scores.probabilities.len(),
            remainder.len()
        )));
    }
    let mut picks = Vec::with_capacity(k);
    if !remainder.is_empty() {
        let cumulative: Vec<f64> = scores
            .probabilities
            .iter()
            .scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..k {
            let u: f64 = rng.gen();
            let pos = cumulative
                .partition_point(|&c| c <= u)
                .min(remainder.len() - 1);
            picks.push(pos);
        }
    }
    assemble(data, hull, seed, k, &remainder, &picks, |pos| {
        1.0 / (k as f64 * scores.probabilities[pos])
    })
}

/// Uniform baseline: `k` i.i.d. uniform draws over the non-hull rows,
/// each at weight `(n - hull_count)/k`. Hull rows are carried (at weight
/// 1) only when `with_hull` is set; the default baseline omits them.
pub fn build_uniform(
    data: &Dataset,
    k: usize,
    seed: u64,
    hull: &HullResult,
    with_hull: bool,
) -> Result<Coreset> {
    if k == 0 {
        return Err(Error::InvalidInput("uniform sample size k must be >= 1".into()));
    }
    let remainder = remainder_indices(data.n(), hull);
    let mut picks = Vec::with_capacity(k);
    if !remainder.is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..k {
            picks.push(rng.gen_range(0..remainder.len()));
        }
    } else if !with_hull {
        return Err(Error::InvalidInput(
            "uniform baseline has no rows to sample (all rows are hull rows)".into(),
        ));
    }
    let weight = remainder.len() as f64 / k as f64;
    let carried = if with_hull {
        hull.clone()
    } else {
        HullResult {
            indices: Vec::new(),
            ..hull.clone()
        }
    };
    assemble(data, &carried, seed, k, &remainder, &picks, |_| weight)
}

fn assemble(
    data: &Dataset,
    hull: &HullResult,
    seed: u64,
    k: usize,
    remainder: &[usize],
    picks: &[usize],
    weight_of: impl Fn(usize) -> f64,
) -> Result<Coreset> {
    let d = data.d();
    let total = hull.indices.len() + picks.len();
    let mut rows = DMatrix::zeros(total, d);
    let mut labels = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    for (out, &i) in hull.indices.iter().enumerate() {
        rows.row_mut(out).copy_from(&data.design().row(i));
        labels.push(data.labels()[i]);
        weights.push(1.0);
    }
    for (offset, &pos) in picks.iter().enumerate() {
        let i = remainder[pos];
        let out = hull.indices.len() + offset;
        rows.row_mut(out).copy_from(&data.design().row(i));
        labels.push(data.labels()[i]);
        weights.push(weight_of(pos));
    }
    Ok(Coreset {
        rows,
        labels,
        weights,
        hull_count: hull.indices.len(),
        seed,
        k,
    })
}

/// Worst relative loss error of the coreset over a set of query
/// parameters. Queries infeasible for the full data are skipped and
/// counted.
#[derive(Debug, Clone, Copy)]
pub struct ErrorReport {
    pub max_rel_error: f64,
    pub evaluated: usize,
    pub skipped: usize,
}

pub fn coreset_error(
    data: &Dataset,
    coreset: &Coreset,
    p: LinkPower,
    beta_set: &[Params],
) -> Result<ErrorReport> {
    let mut max_rel = 0.0f64;
    let mut evaluated = 0usize;
    let mut skipped = 0usize;
    for beta in beta_set {
        let full = data.total_loss(beta, None, p)?;
        let Loss::Finite(full) = full else {
            skipped += 1;
            continue;
        };
        let core = coreset
            .loss(beta, p)?
            .value()
            .expect("coreset rows are a subset of feasible full data");
        max_rel = max_rel.max((full - core).abs() / full);
        evaluated += 1;
    }
    Ok(ErrorReport {
        max_rel_error: max_rel,
        evaluated,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditioning::{l1_basis, sensitivity_scores, ConditioningConfig};
    use crate::datagen::generate_f2;
    use crate::hull::{extreme_points_exact, HullBudget};
    use crate::optimizer::{feasible_start, random_feasible_params};
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    fn fixture(n: usize, seed: u64) -> (Dataset, HullResult, SensitivityScores) {
        let (data, _) = generate_f2(n, 4, LinkPower::Id, seed).unwrap();
        let hull = extreme_points_exact(&data, &HullBudget::default()).unwrap();
        let remainder = remainder_indices(data.n(), &hull);
        let (rows, _) = data.select_rows(&remainder);
        let basis = l1_basis(&rows, &ConditioningConfig::default()).unwrap();
        let scores = sensitivity_scores(&basis);
        (data, hull, scores)
    }

    #[test]
    fn uniform_scores_give_equal_weights() {
        let (data, hull, scores) = fixture(120, 1);
        let flat = SensitivityScores {
            scores: vec![1.0; scores.scores.len()],
            total: scores.scores.len() as f64,
            probabilities: vec![1.0 / scores.scores.len() as f64; scores.scores.len()],
        };
        let k = 30;
        let coreset = build_coreset(&data, k, 5, &hull, &flat).unwrap();
        let expected = (data.n() - hull.indices.len()) as f64 / k as f64;
        for &w in &coreset.weights[hull.indices.len()..] {
            assert_relative_eq!(w, expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn weight_formula_matches_probabilities() {
        let (data, hull, scores) = fixture(150, 2);
        let k = 40;
        let coreset = build_coreset(&data, k, 9, &hull, &scores).unwrap();
        assert_eq!(coreset.len(), hull.indices.len() + k);
        let remainder = remainder_indices(data.n(), &hull);
        for offset in 0..k {
            let out = hull.indices.len() + offset;
            // Recover which remainder row was drawn by matching the design row.
            let pos = remainder
                .iter()
                .position(|&i| {
                    data.design().row(i) == coreset.rows.row(out)
                        && data.labels()[i] == coreset.labels[out]
                })
                .expect("sampled row must come from the remainder");
            assert_relative_eq!(
                coreset.weights[out],
                1.0 / (k as f64 * scores.probabilities[pos]),
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn hull_rows_kept_once_at_weight_one() {
        let (data, hull, scores) = fixture(100, 3);
        let coreset = build_coreset(&data, 25, 11, &hull, &scores).unwrap();
        assert_eq!(coreset.hull_count, hull.indices.len());
        for (out, &i) in hull.indices.iter().enumerate() {
            assert_eq!(coreset.weights[out], 1.0);
            assert_eq!(coreset.labels[out], data.labels()[i]);
            assert_eq!(coreset.rows.row(out), data.design().row(i));
        }
    }

    #[test]
    fn reproducible_per_seed() {
        let (data, hull, scores) = fixture(100, 4);
        let a = build_coreset(&data, 20, 42, &hull, &scores).unwrap();
        let b = build_coreset(&data, 20, 42, &hull, &scores).unwrap();
        assert_eq!(a, b);
        let c = build_coreset(&data, 20, 43, &hull, &scores).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn unbiased_for_fixed_parameters() {
        let p = LinkPower::Id;
        let (data, hull, scores) = fixture(200, 5);
        let base = feasible_start(data.design(), 0.1).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let beta = random_feasible_params(data.design(), &base, 0.1, &mut rng);
        let full = data.total_loss(&beta, None, p).unwrap().value().unwrap();
        let hull_part: f64 = hull
            .indices
            .iter()
            .map(|&i| {
                crate::model::point_loss(data.labels()[i], data.predictor(&beta)[i], p).unwrap()
            })
            .sum();

        let k = 20;
        let seeds = 3000usize;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for s in 0..seeds {
            let coreset = build_coreset(&data, k, s as u64, &hull, &scores).unwrap();
            let value = coreset.loss(&beta, p).unwrap().value().unwrap();
            sum += value;
            sum_sq += value * value;
        }
        let mean = sum / seeds as f64;
        let var = (sum_sq / seeds as f64 - mean * mean).max(0.0);
        let se = (var / seeds as f64).sqrt();
        assert!(
            (mean - full).abs() <= 3.0 * se + 1e-9 * full,
            "mean {mean} vs full {full} (se {se}, hull part {hull_part})"
        );
    }

    #[test]
    fn full_data_as_coreset_has_zero_error() {
        let p = LinkPower::Sqrt;
        let (data, _, _) = fixture(80, 6);
        let coreset = Coreset {
            rows: data.design().clone(),
            labels: data.labels().to_vec(),
            weights: vec![1.0; data.n()],
            hull_count: 0,
            seed: 0,
            k: data.n(),
        };
        let base = feasible_start(data.design(), 0.05).unwrap();
        let report = coreset_error(&data, &coreset, p, &[base]).unwrap();
        assert_eq!(report.evaluated, 1);
        assert!(report.max_rel_error < 1e-12);
    }

    #[test]
    fn error_shrinks_with_sample_size() {
        let p = LinkPower::Id;
        let (data, hull, scores) = fixture(1_000, 7);
        let base = feasible_start(data.design(), 0.1).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let betas: Vec<_> = (0..20)
            .map(|_| random_feasible_params(data.design(), &base, 0.1, &mut rng))
            .collect();
        let median_err = |k: usize| -> f64 {
            let mut errs: Vec<f64> = (0..50)
                .map(|s| {
                    let c = build_coreset(&data, k, 1000 + s, &hull, &scores).unwrap();
                    coreset_error(&data, &c, p, &betas).unwrap().max_rel_error
                })
                .collect();
            errs.sort_by(f64::total_cmp);
            errs[errs.len() / 2]
        };
        let coarse = median_err(100);
        let fine = median_err(600);
        assert!(
            fine <= coarse,
            "median error did not shrink: k=100 -> {coarse}, k=600 -> {fine}"
        );
    }

    #[test]
    fn uniform_default_omits_hull() {
        let (data, hull, _) = fixture(100, 8);
        let k = 30;
        let baseline = build_uniform(&data, k, 3, &hull, false).unwrap();
        assert_eq!(baseline.hull_count, 0);
        assert_eq!(baseline.len(), k);
        let expected = (data.n() - hull.indices.len()) as f64 / k as f64;
        for &w in &baseline.weights {
            assert_relative_eq!(w, expected, max_relative = 1e-12);
        }
        let carried = build_uniform(&data, k, 3, &hull, true).unwrap();
        assert_eq!(carried.hull_count, hull.indices.len());
        assert_eq!(carried.len(), hull.indices.len() + k);
    }

    #[test]
    fn infeasible_queries_skipped() {
        let p = LinkPower::Id;
        let (data, hull, scores) = fixture(90, 9);
        let coreset = build_coreset(&data, 10, 1, &hull, &scores).unwrap();
        let base = feasible_start(data.design(), 0.1).unwrap();
        let mut bad = base.clone();
        bad[0] = -5.0;
        let report = coreset_error(&data, &coreset, p, &[base, bad]).unwrap();
        assert_eq!(report.evaluated, 1);
        assert_eq!(report.skipped, 1);
    }

    #[test]
    fn csv_round_trip_with_header() {
        let (data, hull, scores) = fixture(60, 10);
        let coreset = build_coreset(&data, 12, 77, &hull, &scores).unwrap();
        let text = coreset.to_csv();
        assert!(text.starts_with(&format!(
            "# hull_count={} seed=77 k=12\n",
            hull.indices.len()
        )));
        assert!(text.lines().nth(1).unwrap().starts_with("w,f1,"));
        let back = Coreset::from_csv(&text).unwrap();
        assert_eq!(back, coreset);
    }
}
