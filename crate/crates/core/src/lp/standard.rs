use super::LpProblem;
use crate::matrix::Matrix;

/// Origin of a standard-form column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StandardColumn {
    /// Variable `j` itself, or the positive half of free variable `j`.
    Plus(usize),
    /// Negative half of free variable `j`.
    Minus(usize),
    /// Surplus of constraint row `i`.
    Surplus(usize),
}

/// `minimize c·x subject to A x = b, x >= 0`, obtained by splitting free variables into
/// positive and negative parts and subtracting one surplus per row.
///
/// Column order: original variables in order (a free variable's `Minus` half immediately
/// follows its `Plus` half), then one surplus per row.
#[derive(Debug, Clone)]
pub struct StandardForm {
    pub a: Matrix,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub columns: Vec<StandardColumn>,
    n_original: usize,
}

impl StandardForm {
    pub fn from_problem(p: &LpProblem) -> Self {
        let mut columns = Vec::new();
        for j in 0..p.n_vars() {
            columns.push(StandardColumn::Plus(j));
            if !p.is_nonneg(j) {
                columns.push(StandardColumn::Minus(j));
            }
        }
        columns.extend((0..p.n_rows()).map(StandardColumn::Surplus));

        let rows = p.n_rows();
        let mut a = Matrix::zeros(rows, columns.len());
        let mut c = vec![0.0; columns.len()];
        for (k, col) in columns.iter().enumerate() {
            match *col {
                StandardColumn::Plus(j) => {
                    c[k] = p.cost()[j];
                    for i in 0..rows {
                        a[(i, k)] = p.constraints()[(i, j)];
                    }
                }
                StandardColumn::Minus(j) => {
                    c[k] = -p.cost()[j];
                    for i in 0..rows {
                        a[(i, k)] = -p.constraints()[(i, j)];
                    }
                }
                StandardColumn::Surplus(i) => a[(i, k)] = -1.0,
            }
        }
        Self {
            a,
            b: p.rhs().to_vec(),
            c,
            columns,
            n_original: p.n_vars(),
        }
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn n_rows(&self) -> usize {
        self.b.len()
    }

    /// Maps a standard-form point back to the original variables.
    pub fn recover(&self, x: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.n_original];
        for (k, col) in self.columns.iter().enumerate() {
            match *col {
                StandardColumn::Plus(j) => z[j] += x[k],
                StandardColumn::Minus(j) => z[j] -= x[k],
                StandardColumn::Surplus(_) => {}
            }
        }
        z
    }
}
