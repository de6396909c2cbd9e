//! Dataset representation and the Poisson p-th-root-link loss.
//!
//! The per-point negative log-likelihood is
//! `g_y(z) = z^p - p*y*ln(z) + ln(y!)` for a linear predictor `z = x·β`,
//! restricted to `z > 0`. The total loss sums `g_{y_i}(x_i β)` over rows,
//! optionally weighted. Evaluations near `z ≈ y^{1/p}` use a rearranged
//! form that avoids cancellation between `y ln z` and `ln y!` for large
//! counts.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::LazyLock;

use nalgebra::{DMatrix, DVector, RowDVector};

use crate::{Error, Result};

/// Link exponent for the main pipeline: `p = 1` (ID-link) or `p = 2`
/// (square-root-link).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum LinkPower {
    /// ID-link, `p = 1`.
    Id,
    /// Square-root-link, `p = 2`.
    Sqrt,
}

impl LinkPower {
    pub fn from_int(p: u32) -> Result<Self> {
        match p {
            1 => Ok(LinkPower::Id),
            2 => Ok(LinkPower::Sqrt),
            other => Err(Error::UnsupportedLink(other)),
        }
    }

    #[inline]
    pub fn p(self) -> f64 {
        match self {
            LinkPower::Id => 1.0,
            LinkPower::Sqrt => 2.0,
        }
    }

    #[inline]
    pub fn p_int(self) -> u32 {
        match self {
            LinkPower::Id => 1,
            LinkPower::Sqrt => 2,
        }
    }

    /// `z^p`.
    #[inline]
    pub fn pow(self, z: f64) -> f64 {
        match self {
            LinkPower::Id => z,
            LinkPower::Sqrt => z * z,
        }
    }

    /// `y^{1/p}`, the minimizer of `g_y`.
    #[inline]
    pub fn root(self, y: f64) -> f64 {
        match self {
            LinkPower::Id => y,
            LinkPower::Sqrt => y.sqrt(),
        }
    }

    /// Hölder dual exponent: `q = ∞` for p=1 is represented by `f64::INFINITY`.
    #[inline]
    pub fn dual(self) -> f64 {
        match self {
            LinkPower::Id => f64::INFINITY,
            LinkPower::Sqrt => 2.0,
        }
    }
}

/// Model parameters: a length-`d` vector whose first coordinate multiplies
/// the all-ones intercept column.
pub type Params = DVector<f64>;

/// Total-loss outcome. Infeasible parameters (some `x_i β ≤ 0`) are a
/// sentinel value rather than an error so callers can count them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Loss {
    Finite(f64),
    Infeasible,
}

impl Loss {
    #[inline]
    pub fn is_feasible(self) -> bool {
        matches!(self, Loss::Finite(_))
    }

    #[inline]
    pub fn value(self) -> Option<f64> {
        match self {
            Loss::Finite(v) => Some(v),
            Loss::Infeasible => None,
        }
    }

    /// Finite value, or `+∞` for the infeasible sentinel.
    #[inline]
    pub fn value_or_infinity(self) -> f64 {
        match self {
            Loss::Finite(v) => v,
            Loss::Infeasible => f64::INFINITY,
        }
    }
}

const LOG_FACTORIAL_TABLE_LEN: usize = 1025;

// Cumulative Kahan sums of ln(k); exactness of the small entries matters
// because envelope tests resolve slacks near 1e-10.
static LOG_FACTORIAL_TABLE: LazyLock<Vec<f64>> = LazyLock::new(|| {
    let mut table = Vec::with_capacity(LOG_FACTORIAL_TABLE_LEN);
    table.push(0.0);
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for k in 1..LOG_FACTORIAL_TABLE_LEN {
        let term = (k as f64).ln() - comp;
        let next = sum + term;
        comp = (next - sum) - term;
        sum = next;
        table.push(sum);
    }
    table
});

/// `ln(y!)`: exact cumulative sum for `y ≤ 1024`, Stirling series above.
pub fn log_factorial(y: u64) -> f64 {
    if (y as usize) < LOG_FACTORIAL_TABLE_LEN {
        LOG_FACTORIAL_TABLE[y as usize]
    } else {
        let yf = y as f64;
        yf * yf.ln() - yf + stirling_residual_series(yf)
    }
}

/// `ln(y!) - y ln(y) + y`, evaluated without cancellation for large `y`.
///
/// Equals `g_y(y^{1/p})`, the minimum of the per-point loss, and is the
/// additive remainder used by the stable loss evaluation.
pub fn log_factorial_residual(y: u64) -> f64 {
    if (y as usize) < LOG_FACTORIAL_TABLE_LEN {
        let yf = y as f64;
        if y == 0 {
            0.0
        } else {
            (LOG_FACTORIAL_TABLE[y as usize] + yf) - yf * yf.ln()
        }
    } else {
        stirling_residual_series(y as f64)
    }
}

// 0.5 ln(2πy) + 1/(12y) - 1/(360y^3) + 1/(1260y^5); truncation error is
// below 1e-24 for y > 1024.
fn stirling_residual_series(y: f64) -> f64 {
    let inv = 1.0 / y;
    let inv2 = inv * inv;
    0.5 * (2.0 * std::f64::consts::PI * y).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
}

/// Per-point loss `g_y(z) = z^p - p*y*ln(z) + ln(y!)`.
///
/// For `y = 0` this is exactly `z^p`. Errors on `z ≤ 0` (outside the
/// model domain).
pub fn point_loss(y: u64, z: f64, p: LinkPower) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::NonPositivePredictor(z));
    }
    Ok(point_loss_unchecked(y, z, p))
}

#[inline]
pub(crate) fn point_loss_unchecked(y: u64, z: f64, p: LinkPower) -> f64 {
    if y == 0 {
        return p.pow(z);
    }
    let t = p.pow(z);
    let yf = y as f64;
    let u = (t - yf) / yf;
    if u.abs() <= 0.5 {
        // Near the minimum, `z^p - p y ln z` and `ln y!` cancel to a few
        // units; the rearranged form keeps the result accurate:
        // z^p - p y ln z + ln y! == (t - y) - y ln(t/y) + (ln y! - y ln y + y)
        (t - yf) - yf * u.ln_1p() + log_factorial_residual(y)
    } else {
        t - p.p() * yf * z.ln() + log_factorial(y)
    }
}

/// Per-point loss with the predictor given in log-space, `z = exp(log_z)`.
///
/// `g_y(exp(L)) = exp(pL) - p*y*L + ln(y!)`, with the first term flushed
/// to zero once `pL < -745` (it underflows anyway). This path stays finite
/// for predictors as small as `exp(-n^2)`.
pub fn point_loss_log(y: u64, log_z: f64, p: LinkPower) -> f64 {
    let pl = p.p() * log_z;
    let power_term = if pl < -745.0 { 0.0 } else { pl.exp() };
    power_term - p.p() * (y as f64) * log_z + log_factorial(y)
}

/// First derivative `g'_y(z) = p z^{p-1} - p y / z`.
#[inline]
pub fn point_loss_deriv(y: u64, z: f64, p: LinkPower) -> f64 {
    let yf = y as f64;
    match p {
        LinkPower::Id => 1.0 - yf / z,
        LinkPower::Sqrt => 2.0 * z - 2.0 * yf / z,
    }
}

/// Second derivative `g''_y(z) = p(p-1) z^{p-2} + p y / z^2`.
#[inline]
pub fn point_loss_second_deriv(y: u64, z: f64, p: LinkPower) -> f64 {
    let yf = y as f64;
    match p {
        LinkPower::Id => yf / (z * z),
        LinkPower::Sqrt => 2.0 + 2.0 * yf / (z * z),
    }
}

/// Design matrix with labels. The stored matrix carries the implicit
/// leading all-ones intercept column; raw covariates occupy columns
/// `1..d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    design: DMatrix<f64>,
    labels: Vec<u64>,
    y_max: u64,
}

impl Dataset {
    /// Build from raw covariates (no intercept column stored by the
    /// caller) and count labels.
    pub fn from_features(features: DMatrix<f64>, labels: Vec<u64>) -> Result<Self> {
        let n = features.nrows();
        if n == 0 {
            return Err(Error::InvalidInput("dataset needs at least one row".into()));
        }
        if features.ncols() == 0 {
            return Err(Error::InvalidInput(
                "dataset needs at least one covariate besides the intercept".into(),
            ));
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} feature rows vs {} labels",
                n,
                labels.len()
            )));
        }
        let d = features.ncols() + 1;
        let mut design = DMatrix::zeros(n, d);
        for i in 0..n {
            design[(i, 0)] = 1.0;
            for j in 0..features.ncols() {
                design[(i, j + 1)] = features[(i, j)];
            }
        }
        let y_max = labels.iter().copied().max().unwrap_or(0);
        Ok(Dataset {
            design,
            labels,
            y_max,
        })
    }

    /// Build from a full design matrix whose first column must already be
    /// all ones.
    pub fn from_design(design: DMatrix<f64>, labels: Vec<u64>) -> Result<Self> {
        if design.ncols() < 2 {
            return Err(Error::InvalidInput(
                "design matrix needs an intercept column plus at least one covariate".into(),
            ));
        }
        if design.column(0).iter().any(|&v| v != 1.0) {
            return Err(Error::InvalidInput(
                "first design column must be all ones".into(),
            ));
        }
        if labels.len() != design.nrows() || design.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "{} design rows vs {} labels",
                design.nrows(),
                labels.len()
            )));
        }
        let y_max = labels.iter().copied().max().unwrap_or(0);
        Ok(Dataset {
            design,
            labels,
            y_max,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.design.nrows()
    }

    /// Total number of columns including the intercept.
    #[inline]
    pub fn d(&self) -> usize {
        self.design.ncols()
    }

    #[inline]
    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    /// Covariate part of row `i` (without the intercept coordinate).
    pub fn feature_row(&self, i: usize) -> RowDVector<f64> {
        self.design.row(i).columns(1, self.d() - 1).into_owned()
    }

    #[inline]
    pub fn labels(&self) -> &[u64] {
        &self.labels
    }

    #[inline]
    pub fn y_max(&self) -> u64 {
        self.y_max
    }

    /// Linear predictor `Xβ`.
    pub fn predictor(&self, beta: &Params) -> DVector<f64> {
        &self.design * beta
    }

    /// Extract the given rows (design + labels) in order.
    pub fn select_rows(&self, indices: &[usize]) -> (DMatrix<f64>, Vec<u64>) {
        let d = self.d();
        let mut rows = DMatrix::zeros(indices.len(), d);
        let mut labels = Vec::with_capacity(indices.len());
        for (out, &i) in indices.iter().enumerate() {
            rows.row_mut(out).copy_from(&self.design.row(i));
            labels.push(self.labels[i]);
        }
        (rows, labels)
    }

    /// Dataset with the same labels and features divided by `c`.
    pub fn scaled_features(&self, c: f64) -> Dataset {
        let mut design = self.design.clone();
        for j in 1..self.d() {
            design.column_mut(j).scale_mut(1.0 / c);
        }
        Dataset {
            design,
            labels: self.labels.clone(),
            y_max: self.y_max,
        }
    }

    /// Total loss; see [`weighted_loss`].
    pub fn total_loss(&self, beta: &Params, weights: Option<&[f64]>, p: LinkPower) -> Result<Loss> {
        weighted_loss(&self.design, &self.labels, weights, beta, p)
    }

    /// Gradient and Hessian; see [`weighted_gradient_hessian`].
    pub fn loss_gradient_hessian(
        &self,
        beta: &Params,
        weights: Option<&[f64]>,
        p: LinkPower,
    ) -> Result<(DVector<f64>, DMatrix<f64>)> {
        weighted_gradient_hessian(&self.design, &self.labels, weights, beta, p)
    }

    /// Membership in the shifted domain `D(η)`; see [`membership`].
    pub fn membership_d(&self, beta: &Params, eta: f64) -> (bool, f64) {
        membership(&self.design, beta, eta)
    }

    /// Write as CSV with header `f1,...,f{d-1},y`; the intercept column
    /// is not stored.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let dm1 = self.d() - 1;
        let mut out = String::new();
        for j in 1..=dm1 {
            if j > 1 {
                out.push(',');
            }
            let _ = write!(out, "f{j}");
        }
        out.push_str(",y\n");
        for i in 0..self.n() {
            for j in 1..=dm1 {
                if j > 1 {
                    out.push(',');
                }
                let _ = write!(out, "{}", self.design[(i, j)]);
            }
            let _ = writeln!(out, ",{}", self.labels[i]);
        }
        out
    }

    pub fn load_csv(path: &Path) -> Result<Dataset> {
        let text = std::fs::read_to_string(path)?;
        Self::from_csv(&text)
    }

    pub fn from_csv(text: &str) -> Result<Dataset> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty dataset file".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.len() < 2 || cols.last() != Some(&"y") {
            return Err(Error::Parse(format!(
                "expected header 'f1,...,f{{d-1}},y', got '{header}'"
            )));
        }
        let dm1 = cols.len() - 1;
        let mut feats = Vec::new();
        let mut labels = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != dm1 + 1 {
                return Err(Error::Parse(format!(
                    "row {}: expected {} fields, got {}",
                    lineno + 2,
                    dm1 + 1,
                    fields.len()
                )));
            }
            for f in &fields[..dm1] {
                let v: f64 = f
                    .parse()
                    .map_err(|_| Error::Parse(format!("row {}: bad real '{f}'", lineno + 2)))?;
                feats.push(v);
            }
            let y: u64 = fields[dm1].parse().map_err(|_| {
                Error::Parse(format!(
                    "row {}: label must be a nonnegative integer, got '{}'",
                    lineno + 2,
                    fields[dm1]
                ))
            })?;
            labels.push(y);
        }
        let n = labels.len();
        if n == 0 {
            return Err(Error::Parse("dataset file has no data rows".into()));
        }
        let features = DMatrix::from_row_slice(n, dm1, &feats);
        Dataset::from_features(features, labels)
    }
}

/// Weighted total loss `Σ w_i g_{y_i}(x_i β)` over an arbitrary row
/// matrix. Returns the infeasible sentinel when any predictor is `≤ 0`.
pub fn weighted_loss(
    rows: &DMatrix<f64>,
    labels: &[u64],
    weights: Option<&[f64]>,
    beta: &Params,
    p: LinkPower,
) -> Result<Loss> {
    check_dims(rows, labels, weights, beta)?;
    let z = rows * beta;
    let mut total = 0.0;
    for i in 0..rows.nrows() {
        if z[i] <= 0.0 {
            return Ok(Loss::Infeasible);
        }
        let w = weights.map_or(1.0, |w| w[i]);
        total += w * point_loss_unchecked(labels[i], z[i], p);
    }
    Ok(Loss::Finite(total))
}

/// Gradient `Σ w_i g'_{y_i}(z_i) x_i^T` and Hessian
/// `Σ w_i g''_{y_i}(z_i) x_i^T x_i` of the weighted loss. Errors on an
/// infeasible β.
pub fn weighted_gradient_hessian(
    rows: &DMatrix<f64>,
    labels: &[u64],
    weights: Option<&[f64]>,
    beta: &Params,
    p: LinkPower,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    check_dims(rows, labels, weights, beta)?;
    let d = rows.ncols();
    let z = rows * beta;
    let mut grad = DVector::zeros(d);
    let mut hess = DMatrix::zeros(d, d);
    for i in 0..rows.nrows() {
        if z[i] <= 0.0 {
            return Err(Error::NonPositivePredictor(z[i]));
        }
        let w = weights.map_or(1.0, |w| w[i]);
        let g1 = w * point_loss_deriv(labels[i], z[i], p);
        let g2 = w * point_loss_second_deriv(labels[i], z[i], p);
        let xi = rows.row(i);
        for a in 0..d {
            grad[a] += g1 * xi[a];
            for b in 0..d {
                hess[(a, b)] += g2 * xi[a] * xi[b];
            }
        }
    }
    Ok((grad, hess))
}

fn check_dims(
    rows: &DMatrix<f64>,
    labels: &[u64],
    weights: Option<&[f64]>,
    beta: &Params,
) -> Result<()> {
    if labels.len() != rows.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{} rows vs {} labels",
            rows.nrows(),
            labels.len()
        )));
    }
    if let Some(w) = weights {
        if w.len() != rows.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "{} rows vs {} weights",
                rows.nrows(),
                w.len()
            )));
        }
        if w.iter().any(|&wi| !(wi > 0.0)) {
            return Err(Error::InvalidInput("weights must be strictly positive".into()));
        }
    }
    if beta.len() != rows.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "beta has {} coordinates, rows have {}",
            beta.len(),
            rows.ncols()
        )));
    }
    Ok(())
}

/// Membership in `D(η) = {β : min_i x_i β > η}` together with the exact
/// margin `min_i x_i β − η`.
pub fn membership(rows: &DMatrix<f64>, beta: &Params, eta: f64) -> (bool, f64) {
    let z = rows * beta;
    let min = z.iter().copied().fold(f64::INFINITY, f64::min);
    let margin = min - eta;
    (margin > 0.0, margin)
}

/// Shifted parameters `β + η e_1`. With the all-ones intercept column the
/// margin of every row grows by exactly `η`.
pub fn shift_params(beta: &Params, eta: f64) -> Params {
    let mut shifted = beta.clone();
    shifted[0] += eta;
    shifted
}
