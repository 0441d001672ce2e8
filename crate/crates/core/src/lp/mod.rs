//! Linear programs of the form `minimize c·z subject to A·z >= b`, with a chosen subset of
//! variables constrained nonnegative and the rest free.
//!
//! [`lp_solve`] runs a two-phase primal simplex on a dense tableau. [`lp_enumerate_oracle`]
//! solves tiny instances exactly by enumerating every basis and is meant for tests.

mod dump;
mod oracle;
mod simplex;
mod standard;

use thiserror::Error;

use crate::matrix::Matrix;

pub use dump::{parse_text, to_text};
pub use oracle::{lp_enumerate_oracle, ORACLE_MAX_COLUMNS, ORACLE_MAX_ROWS};
pub use simplex::lp_solve;
pub use standard::{StandardColumn, StandardForm};

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("constraint matrix is {rows}x{cols} but c has {c} entries and b has {b}")]
    Shape {
        rows: usize,
        cols: usize,
        c: usize,
        b: usize,
    },
    #[error("nonnegative index {0} out of range")]
    NonnegIndex(usize),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("instance too large for enumeration: {rows} rows, {cols} standard-form columns")]
    TooLarge { rows: usize, cols: usize },
    #[error("malformed LP text at line {line}: {msg}")]
    Text { line: usize, msg: String },
}

/// `minimize cost·z subject to constraints·z >= rhs`, `z_j >= 0` for `j` in the nonneg set.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    cost: Vec<f64>,
    constraints: Matrix,
    rhs: Vec<f64>,
    nonneg: Vec<bool>,
}

impl LpProblem {
    pub fn new(
        cost: Vec<f64>,
        constraints: Matrix,
        rhs: Vec<f64>,
        nonneg: &[usize],
    ) -> Result<Self, LpError> {
        let (rows, cols) = (constraints.rows(), constraints.cols());
        if cost.len() != cols || rhs.len() != rows {
            return Err(LpError::Shape {
                rows,
                cols,
                c: cost.len(),
                b: rhs.len(),
            });
        }
        if !cost.iter().all(|v| v.is_finite()) {
            return Err(LpError::NonFinite("c"));
        }
        if !constraints.is_finite() {
            return Err(LpError::NonFinite("A"));
        }
        if !rhs.iter().all(|v| v.is_finite()) {
            return Err(LpError::NonFinite("b"));
        }
        let mut mask = vec![false; cols];
        for &j in nonneg {
            *mask.get_mut(j).ok_or(LpError::NonnegIndex(j))? = true;
        }
        Ok(Self {
            cost,
            constraints,
            rhs,
            nonneg: mask,
        })
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    pub fn constraints(&self) -> &Matrix {
        &self.constraints
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn n_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn is_nonneg(&self, j: usize) -> bool {
        self.nonneg[j]
    }

    pub fn nonneg_indices(&self) -> Vec<usize> {
        (0..self.n_vars()).filter(|&j| self.nonneg[j]).collect()
    }

    /// The same problem with the cost vector multiplied by `factor`.
    pub fn with_scaled_cost(&self, factor: f64) -> Self {
        Self {
            cost: self.cost.iter().map(|c| c * factor).collect(),
            ..self.clone()
        }
    }

    pub fn objective(&self, z: &[f64]) -> f64 {
        crate::matrix::dot(&self.cost, z)
    }

    /// Largest violation of `A z >= b` and of the sign constraints, 0 if `z` is feasible.
    pub fn max_violation(&self, z: &[f64]) -> f64 {
        let rows = self
            .constraints
            .mul_vec(z)
            .iter()
            .zip(&self.rhs)
            .map(|(az, b)| (b - az).max(0.0))
            .fold(0.0, f64::max);
        let signs = z
            .iter()
            .enumerate()
            .filter(|(j, _)| self.nonneg[*j])
            .map(|(_, v)| (-v).max(0.0))
            .fold(0.0, f64::max);
        rows.max(signs)
    }

    pub(crate) fn rhs_inf_norm(&self) -> f64 {
        self.rhs.iter().fold(0.0, |a, b| a.max(b.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal point in the original variables; meaningful only when optimal.
    pub z: Vec<f64>,
    /// `c·z` when optimal, `-inf` when unbounded, `+inf` when infeasible.
    pub objective: f64,
    pub iterations: usize,
    /// The same point in standard-form columns (see [`StandardForm`]): free variables split
    /// into nonnegative halves, followed by one surplus per row.
    pub x: Vec<f64>,
    /// Basic standard-form columns, one per row, sorted ascending.
    pub basis: Vec<usize>,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol_feas: f64,
    pub tol_opt: f64,
    /// Defaults to `50 * (rows + columns)` of the problem.
    pub max_iter: Option<usize>,
    /// Pivots between recomputations of the basic solution and reduced costs.
    pub refresh_every: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol_feas: 1e-9,
            tol_opt: 1e-9,
            max_iter: None,
            refresh_every: 50,
        }
    }
}

#[cfg(test)]
mod tests;
