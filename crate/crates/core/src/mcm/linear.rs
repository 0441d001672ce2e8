use serde::{Deserialize, Serialize};

use super::{
    build_regression, check_solution, contradictory_pair, Hyper, McmError, VariableLayout,
};
use crate::dataset::Dataset;
use crate::lp::{lp_solve, LpProblem, LpSolution, SolverOptions};
use crate::matrix::{dot, Matrix};

/// Linear MCM regressor `y = -(w·x + b) / eta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearMcmModel {
    pub w: Vec<f64>,
    pub b: f64,
    pub eta: f64,
    pub h: f64,
    pub slacks_plus: Vec<f64>,
    pub slacks_minus: Vec<f64>,
    pub hyper: Hyper,
}

impl LinearMcmModel {
    pub fn predict_one(&self, x: &[f64]) -> f64 {
        -(dot(&self.w, x) + self.b) / self.eta
    }

    pub fn total_slack(&self) -> f64 {
        self.slacks_plus.iter().chain(&self.slacks_minus).sum()
    }
}

pub fn build_linear_hard(
    d: &Dataset,
    epsilon: f64,
) -> Result<(LpProblem, VariableLayout), McmError> {
    let hyper = Hyper::hard(epsilon);
    hyper.validate()?;
    Ok(build_regression(d.features(), d.targets(), &hyper))
}

pub fn build_linear_soft(
    d: &Dataset,
    epsilon: f64,
    c: f64,
) -> Result<(LpProblem, VariableLayout), McmError> {
    let hyper = Hyper::soft(epsilon, c);
    hyper.validate()?;
    Ok(build_regression(d.features(), d.targets(), &hyper))
}

pub fn extract_linear(
    sol: &LpSolution,
    layout: &VariableLayout,
    hyper: Hyper,
) -> Result<LinearMcmModel, McmError> {
    let (b, eta, h) = check_solution(sol, layout)?;
    let values = |slots: &[super::Slot]| slots.iter().map(|s| s.value(&sol.x)).collect::<Vec<_>>();
    Ok(LinearMcmModel {
        w: values(&layout.weights),
        b,
        eta,
        h,
        slacks_plus: values(&layout.slack_plus),
        slacks_minus: values(&layout.slack_minus),
        hyper,
    })
}

pub fn predict_linear(m: &LinearMcmModel, x: &Matrix) -> Result<Vec<f64>, McmError> {
    if x.cols() != m.w.len() {
        return Err(McmError::DimensionMismatch {
            expected: m.w.len(),
            found: x.cols(),
        });
    }
    Ok(x.iter_rows().map(|r| m.predict_one(r)).collect())
}

/// Builds, solves and extracts in one step. A hard-margin infeasibility caused by two rows
/// with identical inputs is reported with their indices.
pub fn train_linear(
    d: &Dataset,
    hyper: Hyper,
    opts: &SolverOptions,
) -> Result<LinearMcmModel, McmError> {
    let (lp, layout) = match hyper.c {
        None => build_linear_hard(d, hyper.epsilon)?,
        Some(c) => build_linear_soft(d, hyper.epsilon, c)?,
    };
    let sol = lp_solve(&lp, opts);
    match extract_linear(&sol, &layout, hyper) {
        Err(McmError::Infeasible) => Err(
            match contradictory_pair(d.features(), d.targets(), hyper.epsilon) {
                Some((first, second, gap)) => McmError::ContradictoryPair { first, second, gap },
                None => McmError::Infeasible,
            },
        ),
        other => other,
    }
}
