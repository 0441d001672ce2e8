use crate::lp::LpProblem;
use crate::matrix::Matrix;

/// Where one semantic variable lives: its index among the LP variables and its standard-form
/// column(s). A free variable owns two columns, `plus` and `minus`, valued `x[plus] - x[minus]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    pub var: usize,
    pub plus: usize,
    pub minus: Option<usize>,
}

impl Slot {
    pub fn value(&self, x: &[f64]) -> f64 {
        x[self.plus] - self.minus.map_or(0.0, |m| x[m])
    }
}

/// Mapping from the MCM's named variables (`w` or `lambda`, `b`, `eta`, `h`, `q+`, `q-`) to
/// LP columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableLayout {
    /// `w_1..w_n` for linear models, `lambda_1..lambda_M` for kernel models.
    pub weights: Vec<Slot>,
    pub b: Slot,
    /// Absent in the classifier LP.
    pub eta: Option<Slot>,
    pub h: Slot,
    pub slack_plus: Vec<Slot>,
    pub slack_minus: Vec<Slot>,
    n_vars: usize,
    n_columns: usize,
}

impl VariableLayout {
    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    /// Number of standard-form columns excluding surpluses.
    pub fn n_columns(&self) -> usize {
        self.n_columns
    }

    pub fn slots(&self) -> impl Iterator<Item = &Slot> {
        self.weights
            .iter()
            .chain([&self.b])
            .chain(self.eta.as_ref())
            .chain([&self.h])
            .chain(&self.slack_plus)
            .chain(&self.slack_minus)
    }
}

/// Assigns LP variables in order, mirroring the standard-form column numbering (a free
/// variable's negative half immediately follows its positive half).
#[derive(Default)]
pub(crate) struct LayoutBuilder {
    vars: usize,
    columns: usize,
    nonneg: Vec<usize>,
}

impl LayoutBuilder {
    pub fn free(&mut self) -> Slot {
        let slot = Slot {
            var: self.vars,
            plus: self.columns,
            minus: Some(self.columns + 1),
        };
        self.vars += 1;
        self.columns += 2;
        slot
    }

    pub fn nonneg(&mut self) -> Slot {
        let slot = Slot {
            var: self.vars,
            plus: self.columns,
            minus: None,
        };
        self.nonneg.push(self.vars);
        self.vars += 1;
        self.columns += 1;
        slot
    }

    pub fn n_vars(&self) -> usize {
        self.vars
    }

    #[allow(clippy::too_many_arguments)]
    pub fn finish(
        self,
        weights: Vec<Slot>,
        b: Slot,
        eta: Option<Slot>,
        h: Slot,
        slack_plus: Vec<Slot>,
        slack_minus: Vec<Slot>,
        cost: Vec<f64>,
        constraints: Matrix,
        rhs: Vec<f64>,
    ) -> (LpProblem, VariableLayout) {
        let problem = LpProblem::new(cost, constraints, rhs, &self.nonneg)
            .expect("MCM builders produce well-formed finite LPs");
        let layout = VariableLayout {
            weights,
            b,
            eta,
            h,
            slack_plus,
            slack_minus,
            n_vars: self.vars,
            n_columns: self.columns,
        };
        (problem, layout)
    }
}
