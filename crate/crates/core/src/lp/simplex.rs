//! Two-phase primal simplex on a dense tableau.
//!
//! Each row is scaled so that one column holds a unit vector there: a surplus column when
//! `b_i <= 0` (row negated), a nonnegative column that is nonzero only in row `i` when one
//! exists, otherwise an artificial. Those starting columns keep holding `B^-1` for the rest
//! of the solve, which is what the periodic refresh of the basic solution uses.
//!
//! A column that is a fixed multiple of another (the negative half of a split free variable,
//! or a surplus next to a slack that is alone in its row) stays a multiple of it in every
//! tableau, so only one physical copy is stored and the other is read through a scale factor.

use log::debug;

use super::standard::StandardForm;
use super::{LpProblem, LpSolution, LpStatus, SolverOptions};

const PIVOT_TOL: f64 = 1e-9;
/// Pivots smaller than this reject the entering column in favour of the next candidate.
const PIVOT_REJECT: f64 = 1e-5;
const MAX_REJECTIONS: usize = 20;
/// Relative primal residual above which the tableau is rebuilt from the starting rows.
const DRIFT_TOL: f64 = 1e-11;
const DEGENERATE_STEP: f64 = 1e-12;
const DROP_TOL: f64 = 1e-14;

pub fn lp_solve(p: &LpProblem, opts: &SolverOptions) -> LpSolution {
    let sf = StandardForm::from_problem(p);
    let max_iter = opts
        .max_iter
        .unwrap_or(50 * (p.n_rows() + p.n_vars()).max(1));
    let feas_tol = opts.tol_feas * (1.0 + p.rhs_inf_norm());
    let mut tab = Tableau::new(&sf, opts, max_iter, p.n_vars().max(1));

    if tab.n_artificial > 0 {
        let phase1: Vec<f64> = (0..tab.n)
            .map(|j| if j >= tab.n_std { 1.0 } else { 0.0 })
            .collect();
        match tab.run(&phase1, true) {
            Outcome::Optimal => {}
            Outcome::IterationLimit => return tab.finish(&sf, p, LpStatus::IterationLimit),
            Outcome::Unbounded => unreachable!("phase 1 objective is bounded below by zero"),
        }
        let infeasibility = -tab.d[tab.n];
        debug!(
            "phase 1 done after {} pivots, residual {infeasibility:e}",
            tab.iterations
        );
        if infeasibility > feas_tol {
            return tab.finish(&sf, p, LpStatus::Infeasible);
        }
        tab.drive_out_artificials();
    }

    let mut cost = sf.c.clone();
    cost.resize(tab.n, 0.0);
    let status = match tab.run(&cost, false) {
        Outcome::Optimal => LpStatus::Optimal,
        Outcome::Unbounded => LpStatus::Unbounded,
        Outcome::IterationLimit => LpStatus::IterationLimit,
    };
    debug!(
        "simplex finished: {status:?} after {} pivots ({} rows, {} columns)",
        tab.iterations, tab.m, tab.n
    );
    tab.finish(&sf, p, status)
}

enum Outcome {
    Optimal,
    Unbounded,
    IterationLimit,
}

struct Tableau {
    m: usize,
    /// Total columns: standard-form columns followed by artificials.
    n: usize,
    n_std: usize,
    n_artificial: usize,
    /// Stored columns; logical column `j` is `alpha[j]` times stored column `phys[j]`.
    np: usize,
    phys: Vec<usize>,
    alpha: Vec<f64>,
    /// Row-major `m x (np + 1)`; the last entry of each row is the basic value.
    t: Vec<f64>,
    /// Reduced costs; `d[n]` is minus the current objective.
    d: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    barred: Vec<bool>,
    /// Column that held `e_i` at the start; its current contents are column `i` of `B^-1`.
    unit_col: Vec<usize>,
    /// Row-scaled right-hand side of the starting system.
    b0: Vec<f64>,
    /// Starting tableau, kept for reinversion.
    t0: Vec<f64>,
    opts: SolverOptions,
    max_iter: usize,
    iterations: usize,
    since_refresh: usize,
    last_reinversion: usize,
    /// Devex reference weights for pricing.
    weights: Vec<f64>,
    /// Columns skipped for a too-small pivot since the last basis change.
    rejected: Vec<bool>,
    bland: bool,
    degenerate_run: usize,
    degenerate_limit: usize,
}

impl Tableau {
    fn new(
        sf: &StandardForm,
        opts: &SolverOptions,
        max_iter: usize,
        degenerate_limit: usize,
    ) -> Self {
        let m = sf.n_rows();
        let n_std = sf.n_columns();

        // Columns with exactly one nonzero, per row, as crash candidates.
        let mut singleton: Vec<Option<(usize, f64)>> = vec![None; m];
        for j in 0..n_std {
            if matches!(sf.columns[j], super::StandardColumn::Surplus(_)) {
                continue;
            }
            let mut nz = (0..m).filter(|&i| sf.a[(i, j)] != 0.0);
            if let (Some(i), None) = (nz.next(), nz.next()) {
                let v = sf.a[(i, j)];
                if v > 0.0 && singleton[i].is_none() {
                    singleton[i] = Some((j, v));
                }
            }
        }

        enum Start {
            Column(usize, f64),
            Artificial,
        }
        let mut starts = Vec::with_capacity(m);
        let mut n_artificial = 0;
        for (i, (&bi, single)) in sf.b.iter().zip(&singleton).enumerate() {
            let surplus = n_std - m + i;
            let start = if bi <= 0.0 {
                Start::Column(surplus, -1.0)
            } else if let Some((j, v)) = *single {
                Start::Column(j, v)
            } else {
                n_artificial += 1;
                Start::Artificial
            };
            starts.push(start);
        }

        let n = n_std + n_artificial;
        let mut phys = vec![0; n];
        let mut alpha = vec![1.0; n];
        let mut mirror = vec![false; n_std];
        let mut np = 0;
        for j in 0..n_std {
            let twin = match sf.columns[j] {
                // The negative half always directly follows its positive half.
                super::StandardColumn::Minus(_) => Some((j - 1, -1.0)),
                super::StandardColumn::Surplus(i) => singleton[i].map(|(s, v)| (s, -1.0 / v)),
                super::StandardColumn::Plus(_) => None,
            };
            match twin {
                Some((s, a)) => {
                    phys[j] = phys[s];
                    alpha[j] = a * alpha[s];
                    mirror[j] = true;
                }
                None => {
                    phys[j] = np;
                    np += 1;
                }
            }
        }
        for p in phys.iter_mut().skip(n_std) {
            *p = np;
            np += 1;
        }

        let stride = np + 1;
        let mut t = vec![0.0; m * stride];
        let mut basis = vec![0; m];
        let mut b0 = vec![0.0; m];
        let mut next_art = n_std;
        for i in 0..m {
            let (col, scale) = match starts[i] {
                Start::Column(j, v) => (j, 1.0 / v),
                Start::Artificial => {
                    let j = next_art;
                    next_art += 1;
                    (j, 1.0)
                }
            };
            let row = &mut t[i * stride..(i + 1) * stride];
            for (k, v) in sf.a.row(i).iter().enumerate() {
                if !mirror[k] {
                    row[phys[k]] = v * scale;
                }
            }
            row[phys[col]] = 1.0 / alpha[col];
            row[np] = sf.b[i] * scale;
            b0[i] = row[np];
            basis[i] = col;
        }
        let mut is_basic = vec![false; n];
        for &j in &basis {
            is_basic[j] = true;
        }

        Self {
            m,
            n,
            n_std,
            n_artificial,
            np,
            phys,
            alpha,
            t0: t.clone(),
            t,
            d: vec![0.0; n + 1],
            unit_col: basis.clone(),
            basis,
            is_basic,
            barred: vec![false; n],
            weights: vec![1.0; n],
            rejected: vec![false; n],
            b0,
            opts: *opts,
            max_iter,
            iterations: 0,
            since_refresh: 0,
            last_reinversion: 0,
            bland: false,
            degenerate_run: 0,
            degenerate_limit,
        }
    }

    #[inline]
    fn stride(&self) -> usize {
        self.np + 1
    }

    #[inline]
    fn at(&self, r: usize, j: usize) -> f64 {
        self.alpha[j] * self.t[r * (self.np + 1) + self.phys[j]]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.t[r * (self.np + 1) + self.np]
    }

    fn compute_reduced_costs(&mut self, cost: &[f64]) {
        let stride = self.stride();
        let mut y = vec![0.0; stride];
        for r in 0..self.m {
            let cb = cost[self.basis[r]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.t[r * stride..(r + 1) * stride];
            for (yj, &v) in y.iter_mut().zip(row) {
                *yj += cb * v;
            }
        }
        for j in 0..self.n {
            self.d[j] = cost[j] - self.alpha[j] * y[self.phys[j]];
        }
        self.d[self.n] = -y[self.np];
        for r in 0..self.m {
            self.d[self.basis[r]] = 0.0;
        }
    }

    /// Recomputes the basic values as `B^-1 b` from the starting right-hand side and checks
    /// them against the starting rows. When the residual shows that the stored inverse has
    /// drifted, the tableau is rebuilt before the reduced costs are recomputed from `cost`.
    fn refresh(&mut self, cost: &[f64]) {
        self.compute_basic_values();
        if self.iterations > self.last_reinversion {
            let (residual, scale) = self.primal_residual();
            if residual > DRIFT_TOL * scale {
                debug!(
                    "reinverting at pivot {}: residual {residual:e}",
                    self.iterations
                );
                self.reinvert();
                self.compute_basic_values();
            }
        }
        self.compute_reduced_costs(cost);
        self.since_refresh = 0;
    }

    fn compute_basic_values(&mut self) {
        let stride = self.stride();
        let n = self.np;
        let mut x = vec![0.0; self.m];
        for (i, &bi) in self.b0.iter().enumerate() {
            if bi == 0.0 {
                continue;
            }
            let col = self.unit_col[i];
            let (pc, a) = (self.phys[col], self.alpha[col] * bi);
            for (r, xr) in x.iter_mut().enumerate() {
                *xr += self.t[r * stride + pc] * a;
            }
        }
        let tol = self.opts.tol_feas;
        for (r, xr) in x.into_iter().enumerate() {
            self.t[r * stride + n] = if xr < 0.0 && xr > -tol { 0.0 } else { xr };
        }
    }

    /// `max |b0 - B x_B|` over the starting rows, and the magnitude it should be judged
    /// against.
    fn primal_residual(&self) -> (f64, f64) {
        let stride = self.stride();
        let mut res = self.b0.clone();
        let mut scale = self.b0.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        for r in 0..self.m {
            let j = self.basis[r];
            let xj = self.rhs(r);
            if xj == 0.0 {
                continue;
            }
            let (pj, aj) = (self.phys[j], self.alpha[j]);
            for (i, ri) in res.iter_mut().enumerate() {
                let a = aj * self.t0[i * stride + pj];
                if a != 0.0 {
                    *ri -= a * xj;
                    scale = scale.max((a * xj).abs());
                }
            }
        }
        (res.iter().fold(0.0, |a, v| a.max(v.abs())), scale)
    }

    /// Rebuilds the tableau for the current basis from the starting rows by Gauss-Jordan
    /// elimination with partial pivoting. A basic column that turns out numerically dependent
    /// is replaced by the starting column of the row left uncovered.
    fn reinvert(&mut self) {
        let m = self.m;
        self.t.copy_from_slice(&self.t0);
        let mut owner: Vec<Option<usize>> = vec![None; m];
        let mut pending = Vec::new();
        let unit_row: std::collections::HashMap<usize, usize> = self
            .unit_col
            .iter()
            .enumerate()
            .map(|(i, &j)| (j, i))
            .collect();
        for &j in &self.basis {
            match unit_row.get(&j) {
                Some(&i) => owner[i] = Some(j),
                None => pending.push(j),
            }
        }
        let mut dropped = 0;
        for j in pending {
            let mut best: Option<(usize, f64)> = None;
            for r in (0..m).filter(|&r| owner[r].is_none()) {
                let a = self.at(r, j).abs();
                if a > PIVOT_TOL && best.is_none_or(|(_, b)| a > b) {
                    best = Some((r, a));
                }
            }
            match best {
                Some((r, _)) => {
                    self.eliminate(r, j);
                    owner[r] = Some(j);
                }
                None => {
                    self.is_basic[j] = false;
                    dropped += 1;
                }
            }
        }
        for (r, o) in owner.iter().enumerate() {
            let j = o.unwrap_or(self.unit_col[r]);
            self.basis[r] = j;
            self.is_basic[j] = true;
        }
        self.last_reinversion = self.iterations;
        if dropped > 0 {
            debug!("reinversion replaced {dropped} dependent basic columns");
        }
    }

    fn choose_entering(&self) -> Option<usize> {
        let tol = self.opts.tol_opt;
        let eligible = |j: &usize| {
            !self.is_basic[*j] && !self.barred[*j] && !self.rejected[*j] && self.d[*j] < -tol
        };
        if self.bland {
            (0..self.n).find(eligible)
        } else {
            let mut best: Option<(usize, f64)> = None;
            for j in (0..self.n).filter(eligible) {
                let score = self.d[j] * self.d[j] / self.weights[j];
                if best.is_none_or(|(_, s)| score > s) {
                    best = Some((j, score));
                }
            }
            best.map(|(j, _)| j)
        }
    }

    /// Two-pass (Harris) ratio test under Dantzig pricing; textbook minimum ratio with
    /// smallest-index tie-break under Bland's rule.
    fn choose_leaving(&self, q: usize) -> Option<usize> {
        let candidates = (0..self.m).filter(|&r| self.at(r, q) > PIVOT_TOL);
        if self.bland {
            let mut best: Option<(f64, usize)> = None;
            for r in candidates {
                let ratio = self.rhs(r).max(0.0) / self.at(r, q);
                best = match best {
                    None => Some((ratio, r)),
                    Some((br, bp)) => {
                        let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br.abs());
                        if (tie && self.basis[r] < self.basis[bp]) || (!tie && ratio < br) {
                            Some((ratio, r))
                        } else {
                            Some((br, bp))
                        }
                    }
                };
            }
            best.map(|(_, r)| r)
        } else {
            let delta = self.opts.tol_feas;
            let mut bound = f64::INFINITY;
            for r in candidates.clone() {
                bound = bound.min((self.rhs(r).max(0.0) + delta) / self.at(r, q));
            }
            let mut best: Option<usize> = None;
            for r in candidates {
                let a = self.at(r, q);
                if self.rhs(r).max(0.0) / a <= bound {
                    let better = match best {
                        None => true,
                        Some(b) => {
                            let ab = self.at(b, q);
                            a > ab || (a == ab && self.basis[r] < self.basis[b])
                        }
                    };
                    if better {
                        best = Some(r);
                    }
                }
            }
            best
        }
    }

    fn pivot(&mut self, p: usize, q: usize) {
        let stride = self.stride();
        let inv = 1.0 / self.at(p, q);
        let wq = self.weights[q].max(1.0);
        let prow = &self.t[p * stride..(p + 1) * stride];
        for j in 0..self.n {
            let ratio = self.alpha[j] * prow[self.phys[j]] * inv;
            if ratio != 0.0 {
                self.weights[j] = self.weights[j].max(ratio * ratio * wq);
            }
        }
        let leaving = self.basis[p];
        self.weights[leaving] = (wq * inv * inv).max(1.0);

        self.eliminate(p, q);
        let f = self.d[q];
        if f != 0.0 {
            let prow = &self.t[p * stride..(p + 1) * stride];
            for j in 0..self.n {
                self.d[j] -= f * self.alpha[j] * prow[self.phys[j]];
            }
            self.d[self.n] -= f * prow[self.np];
            self.d[q] = 0.0;
        }

        self.is_basic[leaving] = false;
        self.is_basic[q] = true;
        self.basis[p] = q;
    }

    /// Scales row `p` to a unit entry in column `q` and clears column `q` from every other row.
    fn eliminate(&mut self, p: usize, q: usize) {
        let stride = self.stride();
        let n = self.np;
        let (pq, aq) = (self.phys[q], self.alpha[q]);
        let (before, rest) = self.t.split_at_mut(p * stride);
        let (prow, after) = rest.split_at_mut(stride);

        let inv = 1.0 / (aq * prow[pq]);
        for v in prow.iter_mut() {
            *v *= inv;
            if v.abs() < DROP_TOL {
                *v = 0.0;
            }
        }
        prow[pq] = 1.0 / aq;
        if prow[n] < 0.0 && prow[n] > -self.opts.tol_feas {
            prow[n] = 0.0;
        }

        let nz: Vec<usize> = (0..stride).filter(|&j| prow[j] != 0.0).collect();
        let dense = nz.len() * 3 > stride;
        let eliminate = |row: &mut [f64]| {
            let f = aq * row[pq];
            if f == 0.0 {
                return;
            }
            if dense {
                for (v, &pv) in row.iter_mut().zip(prow.iter()) {
                    *v -= f * pv;
                }
            } else {
                for &j in &nz {
                    row[j] -= f * prow[j];
                }
            }
            row[pq] = 0.0;
        };
        for row in before.chunks_exact_mut(stride) {
            eliminate(row);
        }
        for row in after.chunks_exact_mut(stride) {
            eliminate(row);
        }
    }

    /// Entering column and leaving row (`None` when the column is unbounded). Columns whose
    /// pivot element is tiny are passed over while other candidates remain.
    fn select_pivot(&mut self, cost: &[f64]) -> Option<(Option<usize>, usize)> {
        let mut fallback = None;
        let mut rejections = 0;
        let choice = loop {
            let q = match self.choose_entering() {
                Some(q) => q,
                None if self.since_refresh > 0 && fallback.is_none() => {
                    self.refresh(cost);
                    match self.choose_entering() {
                        Some(q) => q,
                        None => break None,
                    }
                }
                None => break fallback,
            };
            let p = self.choose_leaving(q);
            match p {
                Some(r)
                    if self.at(r, q) < PIVOT_REJECT
                        && rejections < MAX_REJECTIONS
                        && !self.bland =>
                {
                    fallback.get_or_insert((p, q));
                    self.rejected[q] = true;
                    rejections += 1;
                }
                _ => break Some((p, q)),
            }
        };
        self.rejected.fill(false);
        choice
    }

    fn run(&mut self, cost: &[f64], phase_one: bool) -> Outcome {
        self.weights.fill(1.0);
        self.refresh(cost);
        loop {
            if self.since_refresh >= self.opts.refresh_every {
                self.refresh(cost);
            }
            let Some((p, q)) = self.select_pivot(cost) else {
                return Outcome::Optimal;
            };
            if self.iterations >= self.max_iter {
                return Outcome::IterationLimit;
            }
            let Some(p) = p else {
                if self.iterations > self.last_reinversion {
                    // Certify the ray on a freshly rebuilt tableau before trusting it.
                    self.reinvert();
                    self.refresh(cost);
                    continue;
                }
                return Outcome::Unbounded;
            };
            let step = self.rhs(p).max(0.0) / self.at(p, q);
            let leaving = self.basis[p];
            self.pivot(p, q);
            self.iterations += 1;
            self.since_refresh += 1;
            if phase_one && leaving >= self.n_std {
                self.barred[leaving] = true;
            }
            if step <= DEGENERATE_STEP {
                self.degenerate_run += 1;
                if !self.bland && self.degenerate_run > self.degenerate_limit {
                    debug!(
                        "switching to Bland's rule after {} degenerate pivots",
                        self.degenerate_run
                    );
                    self.bland = true;
                }
            } else {
                self.degenerate_run = 0;
            }
        }
    }

    /// Pivots basic artificials (all at zero level after a successful phase 1) out of the
    /// basis where possible and bars every artificial from re-entering. An artificial that
    /// cannot leave marks a redundant row.
    fn drive_out_artificials(&mut self) {
        for r in 0..self.m {
            if self.basis[r] < self.n_std {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.n_std {
                let a = self.at(r, j).abs();
                if !self.is_basic[j] && a > PIVOT_TOL && best.is_none_or(|(_, b)| a > b) {
                    best = Some((j, a));
                }
            }
            if let Some((j, _)) = best {
                self.pivot(r, j);
                self.iterations += 1;
                self.since_refresh += 1;
            }
        }
        for j in self.n_std..self.n {
            self.barred[j] = true;
        }
    }

    fn finish(&self, sf: &StandardForm, p: &LpProblem, status: LpStatus) -> LpSolution {
        let mut x = vec![0.0; self.n_std];
        for r in 0..self.m {
            let j = self.basis[r];
            if j < self.n_std {
                x[j] = self.rhs(r).max(0.0);
            }
        }
        let z = sf.recover(&x);
        let objective = match status {
            LpStatus::Unbounded => f64::NEG_INFINITY,
            LpStatus::Infeasible => f64::INFINITY,
            _ => p.objective(&z),
        };
        let mut basis = self.basis.clone();
        basis.sort_unstable();
        LpSolution {
            status,
            z,
            objective,
            iterations: self.iterations,
            x,
            basis,
        }
    }
}
