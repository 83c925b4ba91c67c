//! Dense bounded-variable primal simplex.
//!
//! Problems are stated as
//!
//! ```text
//! min/max  cᵀx   s.t.  A x = b,   l <= x <= u
//! ```
//!
//! with `l`/`u` allowed to be infinite. Phase 1 adds one artificial per row;
//! phase 2 fixes the artificials at zero. Pricing is Dantzig with a Harris
//! ratio test, switching to Bland's rule once a phase has run for more than
//! `5 * num_vars` iterations.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Debug)]
pub struct LinearProgram {
    objective: DVector<f64>,
    a_eq: DMatrix<f64>,
    b_eq: DVector<f64>,
    lower: DVector<f64>,
    upper: DVector<f64>,
    sense: Sense,
}

impl LinearProgram {
    pub fn new(
        objective: DVector<f64>,
        a_eq: DMatrix<f64>,
        b_eq: DVector<f64>,
        lower: DVector<f64>,
        upper: DVector<f64>,
        sense: Sense,
    ) -> Result<Self> {
        let n = objective.len();
        check_dim("LinearProgram (A_eq columns)", n, a_eq.ncols())?;
        check_dim("LinearProgram (b_eq)", a_eq.nrows(), b_eq.len())?;
        check_dim("LinearProgram (lower)", n, lower.len())?;
        check_dim("LinearProgram (upper)", n, upper.len())?;
        // negated so that NaN bounds are rejected too
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if let Some(j) = (0..n).find(|&j| !(lower[j] <= upper[j])) {
            return Err(Error::Invalid(format!(
                "variable {j} has lower bound {} above upper bound {}",
                lower[j], upper[j]
            )));
        }
        if lower.iter().any(|&v| v == f64::INFINITY) || upper.iter().any(|&v| v == f64::NEG_INFINITY) {
            return Err(Error::Invalid("variable bound points the wrong way".into()));
        }
        Ok(Self {
            objective,
            a_eq,
            b_eq,
            lower,
            upper,
            sense,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.a_eq.nrows()
    }

    pub fn objective(&self) -> &DVector<f64> {
        &self.objective
    }

    pub fn a_eq(&self) -> &DMatrix<f64> {
        &self.a_eq
    }

    pub fn b_eq(&self) -> &DVector<f64> {
        &self.b_eq
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    /// Largest constraint violation of `x` (equalities and bounds).
    pub fn max_violation(&self, x: &DVector<f64>) -> f64 {
        let r = &self.a_eq * x - &self.b_eq;
        let eq = r.amax();
        let bounds = (0..x.len())
            .map(|j| (self.lower[j] - x[j]).max(x[j] - self.upper[j]).max(0.0))
            .fold(0.0, f64::max);
        eq.max(bounds)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Numerical breakdown (singular basis, iteration limit, drift).
    SolverError,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective_value: f64,
    pub point: DVector<f64>,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    fn failed(status: LpStatus, n: usize) -> Self {
        Self {
            status,
            objective_value: f64::NAN,
            point: DVector::zeros(n),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LpTolerances {
    /// Primal feasibility, scaled by `1 + max|b|`.
    pub feas: f64,
    /// Optimality of the returned objective.
    pub opt: f64,
}

impl Default for LpTolerances {
    fn default() -> Self {
        Self { feas: 1e-9, opt: 1e-8 }
    }
}

const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 64;
const NOT_BASIC: usize = usize::MAX;

/// Reusable simplex working storage. One instance per concurrent caller.
#[derive(Clone, Debug, Default)]
pub struct SimplexSolver {
    tol: LpTolerances,
    iterations: usize,
    // working state, sized per solve
    rows: usize,
    cols: usize,
    tab: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    lo: Vec<f64>,
    up: Vec<f64>,
    x: Vec<f64>,
    cost: Vec<f64>,
    basis: Vec<usize>,
    row_of: Vec<usize>,
    num_orig: usize,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
    Failed,
}

impl SimplexSolver {
    pub fn new(tol: LpTolerances) -> Self {
        Self {
            tol,
            ..Default::default()
        }
    }

    pub fn tolerances(&self) -> LpTolerances {
        self.tol
    }

    /// Simplex iterations spent by the last call to [`solve`](Self::solve).
    pub fn last_iterations(&self) -> usize {
        self.iterations
    }

    pub fn solve(&mut self, lp: &LinearProgram) -> LpSolution {
        let n = lp.num_vars();
        let m = lp.num_constraints();
        self.iterations = 0;
        self.setup(lp);
        let b_scale = 1.0 + lp.b_eq.amax();
        let feas = self.tol.feas * b_scale;

        // phase 1
        self.cost = vec![0.0; self.cols];
        for k in 0..m {
            self.cost[n + k] = 1.0;
        }
        match self.run_phase(n) {
            PhaseEnd::Optimal => {}
            PhaseEnd::Unbounded | PhaseEnd::Failed => return LpSolution::failed(LpStatus::SolverError, n),
        }
        if !self.refactor() {
            return LpSolution::failed(LpStatus::SolverError, n);
        }
        let infeas: f64 = (0..m).map(|k| self.x[n + k]).sum();
        if infeas > feas {
            return LpSolution::failed(LpStatus::Infeasible, n);
        }
        self.drive_out_artificials();
        for k in 0..m {
            self.lo[n + k] = 0.0;
            self.up[n + k] = 0.0;
        }
        if !self.refactor() {
            return LpSolution::failed(LpStatus::SolverError, n);
        }

        // phase 2
        let sign = match lp.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        self.cost = vec![0.0; self.cols];
        for j in 0..n {
            self.cost[j] = sign * lp.objective[j];
        }
        match self.run_phase(n) {
            PhaseEnd::Optimal => {}
            PhaseEnd::Unbounded => return LpSolution::failed(LpStatus::Unbounded, n),
            PhaseEnd::Failed => return LpSolution::failed(LpStatus::SolverError, n),
        }
        if !self.refactor() {
            return LpSolution::failed(LpStatus::SolverError, n);
        }

        let point = DVector::from_iterator(n, self.x[..n].iter().copied());
        if lp.max_violation(&point) > feas {
            return LpSolution::failed(LpStatus::SolverError, n);
        }
        LpSolution {
            status: LpStatus::Optimal,
            objective_value: lp.objective.dot(&point),
            point,
        }
    }

    fn setup(&mut self, lp: &LinearProgram) {
        let n = lp.num_vars();
        let m = lp.num_constraints();
        self.num_orig = n;
        self.rows = m;
        self.cols = n + m;
        self.lo = lp.lower.iter().copied().chain(std::iter::repeat_n(0.0, m)).collect();
        self.up = lp
            .upper
            .iter()
            .copied()
            .chain(std::iter::repeat_n(f64::INFINITY, m))
            .collect();
        self.x = vec![0.0; self.cols];
        for j in 0..n {
            self.x[j] = if self.lo[j].is_finite() {
                self.lo[j]
            } else if self.up[j].is_finite() {
                self.up[j]
            } else {
                0.0
            };
        }
        // rows flipped so the initial artificial values are nonnegative
        self.a = vec![0.0; m * self.cols];
        self.b = vec![0.0; m];
        for i in 0..m {
            let mut r = lp.b_eq[i];
            for j in 0..n {
                r -= lp.a_eq[(i, j)] * self.x[j];
            }
            let s = if r < 0.0 { -1.0 } else { 1.0 };
            for j in 0..n {
                self.a[i * self.cols + j] = s * lp.a_eq[(i, j)];
            }
            self.a[i * self.cols + n + i] = 1.0;
            self.b[i] = s * lp.b_eq[i];
            self.x[n + i] = s * r;
        }
        self.tab = self.a.clone();
        self.basis = (n..n + m).collect();
        self.row_of = vec![NOT_BASIC; self.cols];
        for (i, &v) in self.basis.iter().enumerate() {
            self.row_of[v] = i;
        }
    }

    fn run_phase(&mut self, num_vars: usize) -> PhaseEnd {
        let bland_after = 5 * num_vars.max(1);
        let max_iter = 50 * (self.cols + self.rows) + 1000;
        let cmax = self.cost.iter().fold(0.0f64, |a, &c| a.max(c.abs()));
        let dj_tol = 1e-10 * (1.0 + cmax);
        let mut since_refactor = 0;
        let mut d = vec![0.0; self.cols];
        let mut col = vec![0.0; self.rows];
        for it in 0.. {
            if it > max_iter {
                return PhaseEnd::Failed;
            }
            let bland = it > bland_after;
            if since_refactor >= REFACTOR_EVERY {
                if !self.refactor() {
                    return PhaseEnd::Failed;
                }
                since_refactor = 0;
            }
            self.reduced_costs(&mut d);

            // pricing
            let mut enter = None;
            let mut best = 0.0;
            for j in 0..self.cols {
                if self.row_of[j] != NOT_BASIC || self.lo[j] == self.up[j] {
                    continue;
                }
                let dir = self.improving_direction(j, d[j], dj_tol);
                if dir == 0.0 {
                    continue;
                }
                if bland {
                    enter = Some((j, dir));
                    break;
                }
                if d[j].abs() > best {
                    best = d[j].abs();
                    enter = Some((j, dir));
                }
            }
            let Some((q, dir)) = enter else {
                return PhaseEnd::Optimal;
            };

            for i in 0..self.rows {
                col[i] = self.tab[i * self.cols + q];
            }
            let step = self.ratio_test(&col, q, dir, bland);
            let (theta, leave) = match step {
                Some(s) => s,
                None => return PhaseEnd::Unbounded,
            };

            // apply the move
            self.x[q] += dir * theta;
            for i in 0..self.rows {
                let v = self.basis[i];
                self.x[v] -= dir * theta * col[i];
            }
            if let Some((r, at_upper)) = leave {
                let out = self.basis[r];
                self.x[out] = if at_upper { self.up[out] } else { self.lo[out] };
                self.pivot(r, q);
            }
            self.iterations += 1;
            since_refactor += 1;
        }
        unreachable!()
    }

    fn improving_direction(&self, j: usize, dj: f64, tol: f64) -> f64 {
        let at_lo = self.lo[j].is_finite() && self.x[j] <= self.lo[j];
        let at_up = self.up[j].is_finite() && self.x[j] >= self.up[j];
        if dj < -tol && !at_up {
            1.0
        } else if dj > tol && !at_lo {
            -1.0
        } else {
            0.0
        }
    }

    fn reduced_costs(&self, d: &mut [f64]) {
        d.copy_from_slice(&self.cost);
        for i in 0..self.rows {
            let cb = self.cost[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.tab[i * self.cols..(i + 1) * self.cols];
            for (dj, &t) in d.iter_mut().zip(row) {
                *dj -= cb * t;
            }
        }
    }

    /// Returns the step length and, unless the entering variable just flips
    /// bounds, the leaving row and whether it leaves at its upper bound.
    fn ratio_test(&self, col: &[f64], q: usize, dir: f64, bland: bool) -> Option<(f64, Option<(usize, bool)>)> {
        let colmax = col.iter().fold(0.0f64, |a, &c| a.max(c.abs()));
        let piv_tol = PIVOT_TOL.max(1e-11 * colmax);
        let harris = 1e-11;
        let flip = self.up[q] - self.lo[q];

        // limit imposed on basic row i, relaxed by `slack`
        let limit = |i: usize, slack: f64| -> Option<(f64, bool)> {
            let alpha = col[i];
            if alpha.abs() <= piv_tol {
                return None;
            }
            let v = self.basis[i];
            let delta = -dir * alpha;
            if delta < 0.0 {
                self.lo[v]
                    .is_finite()
                    .then(|| (((self.x[v] - self.lo[v]) + slack).max(0.0) / -delta, false))
            } else {
                self.up[v]
                    .is_finite()
                    .then(|| (((self.up[v] - self.x[v]) + slack).max(0.0) / delta, true))
            }
        };

        if bland {
            let mut best: Option<(f64, usize, bool)> = None;
            for i in 0..self.rows {
                if let Some((t, up)) = limit(i, 0.0) {
                    let better = match best {
                        None => true,
                        Some((bt, bi, _)) => t < bt - 1e-12 || (t <= bt + 1e-12 && self.basis[i] < self.basis[bi]),
                    };
                    if better {
                        best = Some((t, i, up));
                    }
                }
            }
            return match best {
                Some((t, _, _)) if flip <= t => Some((flip, None)),
                Some((t, i, up)) => Some((t, Some((i, up)))),
                None if flip.is_finite() => Some((flip, None)),
                None => None,
            };
        }

        // Harris pass 1: relaxed minimum ratio
        let mut theta_max = f64::INFINITY;
        for i in 0..self.rows {
            if let Some((t, _)) = limit(i, harris) {
                theta_max = theta_max.min(t);
            }
        }
        if flip <= theta_max {
            return if flip.is_finite() { Some((flip, None)) } else { None };
        }
        // pass 2: largest pivot among rows within the relaxed bound
        let mut pick: Option<(usize, bool, f64)> = None;
        for i in 0..self.rows {
            if let Some((t, up)) = limit(i, 0.0) {
                if t <= theta_max && pick.is_none_or(|(_, _, a)| col[i].abs() > a) {
                    pick = Some((i, up, col[i].abs()));
                }
            }
        }
        let (r, up, _) = pick?;
        let (t, _) = limit(r, 0.0)?;
        Some((t, Some((r, up))))
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let w = self.cols;
        let p = self.tab[r * w + q];
        for j in 0..w {
            self.tab[r * w + j] /= p;
        }
        let (head, rest) = self.tab.split_at_mut(r * w);
        let (prow, tail) = rest.split_at_mut(w);
        for row in head.chunks_mut(w).chain(tail.chunks_mut(w)) {
            let f = row[q];
            if f != 0.0 {
                for (t, &pv) in row.iter_mut().zip(prow.iter()) {
                    *t -= f * pv;
                }
                row[q] = 0.0;
            }
        }
        let out = self.basis[r];
        self.row_of[out] = NOT_BASIC;
        self.basis[r] = q;
        self.row_of[q] = r;
    }

    fn drive_out_artificials(&mut self) {
        let n = self.num_orig;
        for r in 0..self.rows {
            let v = self.basis[r];
            if v < n {
                continue;
            }
            let mut best = None;
            let mut best_abs = 1e-7;
            for j in 0..n {
                if self.row_of[j] != NOT_BASIC {
                    continue;
                }
                let a = self.tab[r * self.cols + j].abs();
                if a > best_abs {
                    best_abs = a;
                    best = Some(j);
                }
            }
            if let Some(j) = best {
                self.x[v] = 0.0;
                self.pivot(r, j);
            }
        }
    }

    /// Rebuilds the tableau and basic values from the original rows.
    fn refactor(&mut self) -> bool {
        let (m, w) = (self.rows, self.cols);
        if m == 0 {
            return true;
        }
        let bmat = DMatrix::from_fn(m, m, |i, k| self.a[i * w + self.basis[k]]);
        let lu = bmat.lu();
        let full = DMatrix::from_fn(m, w, |i, j| self.a[i * w + j]);
        let Some(t) = lu.solve(&full) else {
            return false;
        };
        let mut rhs = DVector::from_column_slice(&self.b);
        for j in 0..w {
            if self.row_of[j] == NOT_BASIC && self.x[j] != 0.0 {
                for i in 0..m {
                    rhs[i] -= self.a[i * w + j] * self.x[j];
                }
            }
        }
        let Some(xb) = lu.solve(&rhs) else {
            return false;
        };
        if t.iter().any(|v| !v.is_finite()) || xb.iter().any(|v| !v.is_finite()) {
            return false;
        }
        for i in 0..m {
            for j in 0..w {
                self.tab[i * w + j] = t[(i, j)];
            }
            self.x[self.basis[i]] = xb[i];
        }
        true
    }
}

/// Solves `lp` with a fresh solver and default tolerances.
pub fn solve(lp: &LinearProgram) -> LpSolution {
    SimplexSolver::default().solve(lp)
}
