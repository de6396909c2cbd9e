//! Data reduction for Poisson regression with ID-link (p=1) and
//! square-root-link (p=2).
//!
//! The crate builds (1±ε)-coresets by sensitivity sampling: convex-hull
//! rows are kept at weight 1, the remaining rows are sampled i.i.d. from
//! an ℓp-conditioning-based importance distribution, and the reduced
//! problem is optimized over a shifted domain `D(η)` that keeps the
//! linear predictor away from the logarithmic asymptote at zero.
//!
//! Modules follow the pipeline:
//!
//! - [`model`] — dataset representation, the per-point loss `g_y(z)` and
//!   its derivatives, feasibility predicates for `D(η)`.
//! - [`envelopes`] — closed-form envelope bounds on `g_y`, the Lambert
//!   `W0` function with square-root bounds, the tight tangency slope
//!   `λ*(y)`, label rounding, and the `p ≥ 3` counterexample search.
//! - [`conditioning`] — sketch-QR well-conditioned bases and per-row
//!   sensitivity scores.
//! - [`hull`] — unit-ball normalization, exact extreme points, and
//!   ε-kernel extent approximation.
//! - [`coreset`] — hull-plus-sample coreset assembly and the uniform
//!   baseline.
//! - [`optimizer`] — barrier Newton minimization over `D(η)` with margin
//!   constraints on hull rows.
//! - [`datagen`] — synthetic benchmark instances and the circle hard
//!   instance.
//! - [`harness`] — experiment orchestration, verification suites, CSV
//!   and SVG emission.
//!
//! Every runnable capability has a matching program under `examples/`;
//! the `poisson-coreset` binary exposes the same operations as
//! subcommands.

// `!(x > 0.0)`-style guards deliberately treat NaN as invalid input.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Dense numeric loops index several arrays at matching positions.
#![allow(clippy::needless_range_loop)]

pub mod conditioning;
pub mod coreset;
pub mod datagen;
pub mod envelopes;
pub mod harness;
pub mod hull;
pub mod model;
pub mod optimizer;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-positive linear predictor z = {0}")]
    NonPositivePredictor(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("sketched matrix is rank deficient after {attempts} attempts")]
    RankDeficient { attempts: usize },
    #[error("exact hull budget exceeded (n = {n}, d = {d}); use the eps-kernel mode")]
    HullBudgetExceeded { n: usize, d: usize },
    #[error("no feasible parameter with margin above {0}")]
    Infeasible(f64),
    #[error("unsupported link power p = {0}; the main pipeline accepts p in {{1, 2}}")]
    UnsupportedLink(u32),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
