use serde::{Deserialize, Serialize};

use super::layout::LayoutBuilder;
use super::{check_solution, McmError, VariableLayout};
use crate::dataset::Dataset;
use crate::lp::{lp_solve, LpProblem, LpSolution, SolverOptions};
use crate::matrix::{dot, Matrix};

/// Hard-margin linear MCM classifier with discriminant `f(x) = w·x + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearMcmClassifier {
    pub w: Vec<f64>,
    pub b: f64,
    pub h: f64,
}

/// `minimize h` subject to `h >= y_i (w·x_i + b) >= 1`, with the dataset targets as ±1 labels.
pub fn build_classifier_hard(d: &Dataset) -> Result<(LpProblem, VariableLayout), McmError> {
    let labels = d.targets();
    if let Some((index, &value)) = labels
        .iter()
        .enumerate()
        .find(|(_, &v)| v != 1.0 && v != -1.0)
    {
        return Err(McmError::BadLabel { index, value });
    }
    if labels.iter().all(|&v| v == labels[0]) {
        return Err(McmError::SingleClass);
    }

    let x = d.features();
    let (m, n) = (x.rows(), x.cols());
    let mut lb = LayoutBuilder::default();
    let weights: Vec<_> = (0..n).map(|_| lb.free()).collect();
    let b = lb.free();
    let h = lb.nonneg();
    let vars = lb.n_vars();

    let mut cost = vec![0.0; vars];
    cost[h.var] = 1.0;
    let mut a = Matrix::zeros(2 * m, vars);
    let mut rhs = vec![0.0; 2 * m];
    for i in 0..m {
        let y = labels[i];
        for (w, &v) in weights.iter().zip(x.row(i)) {
            a[(i, w.var)] = -y * v;
            a[(m + i, w.var)] = y * v;
        }
        a[(i, b.var)] = -y;
        a[(i, h.var)] = 1.0;
        a[(m + i, b.var)] = y;
        rhs[m + i] = 1.0;
    }
    Ok(lb.finish(weights, b, None, h, Vec::new(), Vec::new(), cost, a, rhs))
}

pub fn extract_classifier(
    sol: &LpSolution,
    layout: &VariableLayout,
) -> Result<LinearMcmClassifier, McmError> {
    let (b, _, h) = check_solution(sol, layout)?;
    Ok(LinearMcmClassifier {
        w: layout.weights.iter().map(|s| s.value(&sol.x)).collect(),
        b,
        h,
    })
}

pub fn train_classifier(
    d: &Dataset,
    opts: &SolverOptions,
) -> Result<LinearMcmClassifier, McmError> {
    let (lp, layout) = build_classifier_hard(d)?;
    extract_classifier(&lp_solve(&lp, opts), &layout)
}

/// Sign of `w·x + b`; zero maps to +1.
pub fn classify(m: &LinearMcmClassifier, x: &[f64]) -> i8 {
    if dot(&m.w, x) + m.b >= 0.0 {
        1
    } else {
        -1
    }
}
