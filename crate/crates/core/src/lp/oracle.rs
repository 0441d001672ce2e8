//! Exact solution of tiny LPs by enumerating every basis of the standard form.

use super::standard::StandardForm;
use super::{LpError, LpProblem, LpSolution, LpStatus};
use crate::matrix::Matrix;

pub const ORACLE_MAX_COLUMNS: usize = 14;
pub const ORACLE_MAX_ROWS: usize = 10;

const SINGULAR_TOL: f64 = 1e-10;
const SIGN_TOL: f64 = 1e-9;

/// Enumerates all `rows`-subsets of standard-form columns in lexicographic order, solves
/// each basis system, and keeps the feasible one with the smallest objective (the first one
/// found among exact ties). The problem is unbounded when some basis has a nonbasic column
/// whose edge direction is nonnegative with negative reduced cost.
pub fn lp_enumerate_oracle(p: &LpProblem) -> Result<LpSolution, LpError> {
    let sf = StandardForm::from_problem(p);
    let (rows, cols) = (sf.n_rows(), sf.n_columns());
    if cols > ORACLE_MAX_COLUMNS || rows > ORACLE_MAX_ROWS {
        return Err(LpError::TooLarge { rows, cols });
    }

    let mut best: Option<(f64, Vec<usize>, Vec<f64>)> = None;
    let mut has_ray = false;
    let mut examined = 0;
    let mut subset: Vec<usize> = (0..rows).collect();
    loop {
        examined += 1;
        if let Some(inverse) = invert(&basis_matrix(&sf.a, &subset)) {
            let x_b = inverse.mul_vec(&sf.b);
            if x_b.iter().all(|&v| v >= -SIGN_TOL) {
                let obj: f64 = subset.iter().zip(&x_b).map(|(&j, v)| sf.c[j] * v).sum();
                if best.as_ref().is_none_or(|(b, _, _)| obj < *b - 1e-12) {
                    best = Some((obj, subset.clone(), x_b));
                }
            }
            if !has_ray {
                has_ray = improving_ray(&sf, &subset, &inverse);
            }
        }
        if !next_combination(&mut subset, cols) {
            break;
        }
    }

    let Some((_, basis, x_b)) = best else {
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            z: vec![0.0; p.n_vars()],
            objective: f64::INFINITY,
            iterations: examined,
            x: vec![0.0; cols],
            basis: Vec::new(),
        });
    };
    let mut x = vec![0.0; cols];
    for (&j, &v) in basis.iter().zip(&x_b) {
        x[j] = v.max(0.0);
    }
    let z = sf.recover(&x);
    let (status, objective) = if has_ray {
        (LpStatus::Unbounded, f64::NEG_INFINITY)
    } else {
        (LpStatus::Optimal, p.objective(&z))
    };
    Ok(LpSolution {
        status,
        z,
        objective,
        iterations: examined,
        x,
        basis,
    })
}

fn improving_ray(sf: &StandardForm, subset: &[usize], inverse: &Matrix) -> bool {
    let cols = sf.n_columns();
    (0..cols).filter(|j| !subset.contains(j)).any(|j| {
        let aj = sf.a.column(j);
        let direction = inverse.mul_vec(&aj);
        let reduced = sf.c[j]
            - subset
                .iter()
                .zip(&direction)
                .map(|(&k, v)| sf.c[k] * v)
                .sum::<f64>();
        // moving along x_j = t, x_B = x_B - t * direction
        direction.iter().all(|&v| v <= SIGN_TOL) && reduced < -SIGN_TOL
    })
}

fn basis_matrix(a: &Matrix, subset: &[usize]) -> Matrix {
    let mut b = Matrix::zeros(a.rows(), subset.len());
    for i in 0..a.rows() {
        for (k, &j) in subset.iter().enumerate() {
            b[(i, k)] = a[(i, j)];
        }
    }
    b
}

/// Gauss-Jordan inverse with partial pivoting; `None` when numerically singular.
fn invert(b: &Matrix) -> Option<Matrix> {
    let n = b.rows();
    let mut a = b.clone();
    let mut inv = Matrix::identity(n);
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[(x, col)].abs().total_cmp(&a[(y, col)].abs()))?;
        if a[(piv, col)].abs() < SINGULAR_TOL {
            return None;
        }
        for k in 0..n {
            let tmp = a[(col, k)];
            a[(col, k)] = a[(piv, k)];
            a[(piv, k)] = tmp;
            let tmp = inv[(col, k)];
            inv[(col, k)] = inv[(piv, k)];
            inv[(piv, k)] = tmp;
        }
        let d = a[(col, col)];
        for k in 0..n {
            a[(col, k)] /= d;
            inv[(col, k)] /= d;
        }
        for r in 0..n {
            if r != col {
                let f = a[(r, col)];
                if f != 0.0 {
                    for k in 0..n {
                        a[(r, k)] -= f * a[(col, k)];
                        inv[(r, k)] -= f * inv[(col, k)];
                    }
                }
            }
        }
    }
    Some(inv)
}

/// Advances `subset` to the next `k`-combination of `0..n` in lexicographic order.
fn next_combination(subset: &mut [usize], n: usize) -> bool {
    let k = subset.len();
    for i in (0..k).rev() {
        if subset[i] < n - k + i {
            subset[i] += 1;
            for j in i + 1..k {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
