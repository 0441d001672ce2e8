use serde::{Deserialize, Serialize};

use super::{build_regression, check_solution, Hyper, McmError, VariableLayout};
use crate::dataset::Dataset;
use crate::kernel::{gram, KernelSpec};
use crate::lp::{lp_solve, LpProblem, LpSolution, SolverOptions};
use crate::matrix::Matrix;

const SYMMETRY_TOL: f64 = 1e-10;

/// Kernel MCM regressor `y = -(sum_j lambda_j K(x, x_j) + b) / eta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelMcmModel {
    pub lambda: Vec<f64>,
    pub b: f64,
    pub eta: f64,
    pub h: f64,
    pub support_indices: Vec<usize>,
    pub train_x: Matrix,
    pub spec: KernelSpec,
    pub hyper: Hyper,
}

impl KernelMcmModel {
    pub fn n_support(&self) -> usize {
        self.support_indices.len()
    }
}

/// Which training points enter the prediction sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PredictMode {
    /// Support vectors only; each skipped term is below `tol_sv * max|lambda|` in weight.
    #[default]
    SupportOnly,
    Full,
}

/// Soft-margin kernel LP over a precomputed Gram matrix.
pub fn build_kernel_soft(
    g: &Matrix,
    targets: &[f64],
    epsilon: f64,
    c: f64,
) -> Result<(LpProblem, VariableLayout), McmError> {
    let hyper = Hyper::soft(epsilon, c);
    hyper.validate()?;
    if g.rows() != g.cols() {
        return Err(McmError::DimensionMismatch {
            expected: g.rows(),
            found: g.cols(),
        });
    }
    if g.rows() != targets.len() {
        return Err(McmError::DimensionMismatch {
            expected: g.rows(),
            found: targets.len(),
        });
    }
    if !g.is_finite() {
        return Err(McmError::NonFiniteGram);
    }
    let asym = g.asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(McmError::AsymmetricGram(asym));
    }
    Ok(build_regression(g, targets, &hyper))
}

pub fn extract_kernel(
    sol: &LpSolution,
    layout: &VariableLayout,
    train_x: &Matrix,
    spec: KernelSpec,
    hyper: Hyper,
    tol_sv: f64,
) -> Result<KernelMcmModel, McmError> {
    let (b, eta, h) = check_solution(sol, layout)?;
    let lambda: Vec<f64> = layout.weights.iter().map(|s| s.value(&sol.x)).collect();
    if lambda.len() != train_x.rows() {
        return Err(McmError::DimensionMismatch {
            expected: train_x.rows(),
            found: lambda.len(),
        });
    }
    Ok(KernelMcmModel {
        support_indices: support_indices(&lambda, tol_sv),
        lambda,
        b,
        eta,
        h,
        train_x: train_x.clone(),
        spec,
        hyper,
    })
}

/// Indices `j` with `|lambda_j| > tol_sv * max_k |lambda_k|`; empty when every lambda is zero.
pub(crate) fn support_indices(lambda: &[f64], tol_sv: f64) -> Vec<usize> {
    let max = lambda.iter().fold(0.0f64, |a, l| a.max(l.abs()));
    if max == 0.0 {
        return Vec::new();
    }
    (0..lambda.len())
        .filter(|&j| lambda[j].abs() > tol_sv * max)
        .collect()
}

pub fn predict_kernel(m: &KernelMcmModel, x: &Matrix) -> Result<Vec<f64>, McmError> {
    predict_kernel_with(m, x, PredictMode::SupportOnly)
}

pub fn predict_kernel_with(
    m: &KernelMcmModel,
    x: &Matrix,
    mode: PredictMode,
) -> Result<Vec<f64>, McmError> {
    if x.cols() != m.train_x.cols() {
        return Err(McmError::DimensionMismatch {
            expected: m.train_x.cols(),
            found: x.cols(),
        });
    }
    m.spec.validate()?;
    let all: Vec<usize>;
    let terms: &[usize] = match mode {
        PredictMode::SupportOnly => &m.support_indices,
        PredictMode::Full => {
            all = (0..m.lambda.len()).collect();
            &all
        }
    };
    Ok(x.iter_rows()
        .map(|row| {
            let s: f64 = terms
                .iter()
                .map(|&j| m.lambda[j] * m.spec.eval_unchecked(row, m.train_x.row(j)))
                .sum();
            -(s + m.b) / m.eta
        })
        .collect())
}

/// Computes the Gram matrix, solves the soft-margin LP and extracts the model.
pub fn train_kernel(
    d: &Dataset,
    spec: KernelSpec,
    hyper: Hyper,
    opts: &SolverOptions,
) -> Result<KernelMcmModel, McmError> {
    let c = hyper.c.ok_or(McmError::MissingC)?;
    let g = gram(&spec, d.features())?;
    let (lp, layout) = build_kernel_soft(&g, d.targets(), hyper.epsilon, c)?;
    let sol = lp_solve(&lp, opts);
    extract_kernel(&sol, &layout, d.features(), spec, hyper, super::TOL_SV)
}
