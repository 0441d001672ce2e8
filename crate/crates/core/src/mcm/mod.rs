//! MCM linear programs: builders, solution extraction and prediction.
//!
//! Regression follows the classification reduction: the samples `(x_i, y_i + eps)` form the
//! positive class and `(x_i, y_i - eps)` the negative class of an (n+1)-dimensional problem,
//! separated by `w·x + eta·y + b = 0`. With `f_i = w·x_i + b` the LP is
//!
//! ```text
//! minimize   h + C * sum_i (q+_i + q-_i)
//! subject to h >= f_i + eta (y_i + eps)
//!            f_i + eta (y_i + eps) + q+_i >= 1
//!            h >= -(f_i + eta (y_i - eps))
//!            -(f_i + eta (y_i - eps)) + q-_i >= 1
//! ```
//!
//! where the hard-margin variant has no `q` and no `C` term. `w` and `b` are free; `eta`, `h`
//! and the slacks are nonnegative. `eta` is an LP variable even though it is only implied by
//! the constraints of the printed formulation: adding the two `>= 1` rows gives
//! `2 eta eps + q+_i + q-_i >= 2`, so `eta` is strictly positive whenever the slacks are
//! small, and the prediction `y = -(w·x + b) / eta` only depends on ratios. The kernel
//! variant replaces `w·x_i` by `sum_j lambda_j K(x_i, x_j)`.

mod classifier;
mod kernel_model;
mod layout;
mod linear;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::KernelError;
use crate::lp::LpStatus;
use crate::matrix::Matrix;

pub use classifier::{
    build_classifier_hard, classify, extract_classifier, train_classifier, LinearMcmClassifier,
};
pub use kernel_model::{
    build_kernel_soft, extract_kernel, predict_kernel, predict_kernel_with, train_kernel,
    KernelMcmModel, PredictMode,
};
pub use layout::{Slot, VariableLayout};
pub use linear::{
    build_linear_hard, build_linear_soft, extract_linear, predict_linear, train_linear,
    LinearMcmModel,
};

/// Below this, dividing by `eta` is numerically meaningless.
pub const ETA_TOL: f64 = 1e-8;
/// Support vectors are the `j` with `|lambda_j| > TOL_SV * max_k |lambda_k|`.
pub const TOL_SV: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum McmError {
    #[error("epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),
    #[error("C must be positive and finite, got {0}")]
    InvalidC(f64),
    #[error("kernel training needs a soft-margin C")]
    MissingC,
    #[error("label {value} at index {index} is not +1 or -1")]
    BadLabel { index: usize, value: f64 },
    #[error("classifier training needs both classes present")]
    SingleClass,
    #[error("Gram matrix is not symmetric (max asymmetry {0:e})")]
    AsymmetricGram(f64),
    #[error("Gram matrix contains non-finite entries")]
    NonFiniteGram,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(
        "rows {first} and {second} share the same inputs but their targets differ by {gap} >= 2*epsilon; \
         the hard-margin problem is infeasible"
    )]
    ContradictoryPair {
        first: usize,
        second: usize,
        gap: f64,
    },
    #[error("the hard-margin problem is infeasible: no hyperplane fits strictly inside the epsilon tube")]
    Infeasible,
    #[error("LP solver stopped with status {0:?}")]
    NotOptimal(LpStatus),
    #[error(
        "degenerate regressor: eta = {eta:e} <= {ETA_TOL:e}; try a smaller epsilon or a larger C"
    )]
    DegenerateEta { eta: f64 },
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Regression hyperparameters. `c` is `None` for the hard-margin machine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub epsilon: f64,
    #[serde(rename = "C")]
    pub c: Option<f64>,
}

impl Hyper {
    pub fn hard(epsilon: f64) -> Self {
        Self { epsilon, c: None }
    }

    pub fn soft(epsilon: f64, c: f64) -> Self {
        Self {
            epsilon,
            c: Some(c),
        }
    }

    pub fn validate(&self) -> Result<(), McmError> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(McmError::InvalidEpsilon(self.epsilon));
        }
        match self.c {
            Some(c) if !(c > 0.0 && c.is_finite()) => Err(McmError::InvalidC(c)),
            _ => Ok(()),
        }
    }
}

/// Builds the regression LP over a design matrix whose row `i` holds the coefficients of the
/// weight variables in `f_i` (the inputs `x_i` for linear models, Gram row `i` for kernels).
pub(crate) fn build_regression(
    design: &Matrix,
    targets: &[f64],
    hyper: &Hyper,
) -> (crate::lp::LpProblem, VariableLayout) {
    let m = design.rows();
    let p = design.cols();
    let eps = hyper.epsilon;

    let mut lb = layout::LayoutBuilder::default();
    let weights: Vec<Slot> = (0..p).map(|_| lb.free()).collect();
    let b = lb.free();
    let eta = lb.nonneg();
    let h = lb.nonneg();
    let (slack_plus, slack_minus): (Vec<Slot>, Vec<Slot>) = if hyper.c.is_some() {
        let plus = (0..m).map(|_| lb.nonneg()).collect();
        let minus = (0..m).map(|_| lb.nonneg()).collect();
        (plus, minus)
    } else {
        (Vec::new(), Vec::new())
    };
    let n = lb.n_vars();

    let mut cost = vec![0.0; n];
    cost[h.var] = 1.0;
    if let Some(c) = hyper.c {
        for s in slack_plus.iter().chain(&slack_minus) {
            cost[s.var] = c;
        }
    }

    // Row blocks, each of length m: upper h-bound, upper margin, lower h-bound, lower margin.
    let mut a = Matrix::zeros(4 * m, n);
    let mut rhs = vec![0.0; 4 * m];
    for (i, &yi) in targets.iter().enumerate() {
        let xi = design.row(i);
        let up = yi + eps;
        let lo = yi - eps;

        // h - f_i - eta (y_i + eps) >= 0
        let r = i;
        for (w, &v) in weights.iter().zip(xi) {
            a[(r, w.var)] = -v;
        }
        a[(r, b.var)] = -1.0;
        a[(r, eta.var)] = -up;
        a[(r, h.var)] = 1.0;

        // f_i + eta (y_i + eps) + q+_i >= 1
        let r = m + i;
        for (w, &v) in weights.iter().zip(xi) {
            a[(r, w.var)] = v;
        }
        a[(r, b.var)] = 1.0;
        a[(r, eta.var)] = up;
        if let Some(q) = slack_plus.get(i) {
            a[(r, q.var)] = 1.0;
        }
        rhs[r] = 1.0;

        // h + f_i + eta (y_i - eps) >= 0
        let r = 2 * m + i;
        for (w, &v) in weights.iter().zip(xi) {
            a[(r, w.var)] = v;
        }
        a[(r, b.var)] = 1.0;
        a[(r, eta.var)] = lo;
        a[(r, h.var)] = 1.0;

        // -f_i - eta (y_i - eps) + q-_i >= 1
        let r = 3 * m + i;
        for (w, &v) in weights.iter().zip(xi) {
            a[(r, w.var)] = -v;
        }
        a[(r, b.var)] = -1.0;
        a[(r, eta.var)] = -lo;
        if let Some(q) = slack_minus.get(i) {
            a[(r, q.var)] = 1.0;
        }
        rhs[r] = 1.0;
    }

    lb.finish(
        weights,
        b,
        Some(eta),
        h,
        slack_plus,
        slack_minus,
        cost,
        a,
        rhs,
    )
}

/// Shared post-solve checks: optimal status and a usable `eta`.
pub(crate) fn check_solution(
    sol: &crate::lp::LpSolution,
    layout: &VariableLayout,
) -> Result<(f64, f64, f64), McmError> {
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(McmError::Infeasible),
        other => return Err(McmError::NotOptimal(other)),
    }
    let eta = layout.eta.map_or(1.0, |s| s.value(&sol.x));
    if eta.abs() <= ETA_TOL {
        return Err(McmError::DegenerateEta { eta });
    }
    Ok((layout.b.value(&sol.x), eta, layout.h.value(&sol.x)))
}

/// Finds two rows with identical inputs whose targets are at least `2 * epsilon` apart.
pub(crate) fn contradictory_pair(
    x: &Matrix,
    y: &[f64],
    epsilon: f64,
) -> Option<(usize, usize, f64)> {
    let mut order: Vec<usize> = (0..x.rows()).collect();
    order.sort_by(|&a, &b| {
        x.row(a)
            .iter()
            .zip(x.row(b))
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && x.row(order[end]) == x.row(order[start]) {
            end += 1;
        }
        let group = &order[start..end];
        if group.len() > 1 {
            let lo = *group
                .iter()
                .min_by(|&&a, &&b| y[a].total_cmp(&y[b]))
                .unwrap();
            let hi = *group
                .iter()
                .max_by(|&&a, &&b| y[a].total_cmp(&y[b]))
                .unwrap();
            let gap = y[hi] - y[lo];
            if gap >= 2.0 * epsilon {
                return Some((lo.min(hi), lo.max(hi), gap));
            }
        }
        start = end;
    }
    None
}

pub(crate) fn mean_squared_error(pred: &[f64], truth: &[f64]) -> f64 {
    pred.iter()
        .zip(truth)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / truth.len().max(1) as f64
}
