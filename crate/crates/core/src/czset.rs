//! Constrained zonotopes `{G, c, A, b} = { Gξ + c : ξ ∈ [-1,1]^ng, Aξ = b }`
//! and the exact set operations on them, interval hulls, membership,
//! sampling and order reduction.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{check_dim, Error, Result};
use crate::interval::{Interval, IntervalVector};
use crate::lp::{LinearProgram, LpStatus, Sense, SimplexSolver};

/// A zonotope `{G, c}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Zonotope {
    g: DMatrix<f64>,
    c: DVector<f64>,
}

impl Zonotope {
    pub fn new(g: DMatrix<f64>, c: DVector<f64>) -> Result<Self> {
        check_dim("Zonotope (rows of G)", c.len(), g.nrows())?;
        Ok(Self { g, c })
    }

    pub fn point(c: DVector<f64>) -> Self {
        let n = c.len();
        Self {
            g: DMatrix::zeros(n, 0),
            c,
        }
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn ng(&self) -> usize {
        self.g.ncols()
    }

    pub fn generators(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn to_cz(&self) -> ConstrainedZonotope {
        ConstrainedZonotope::from_zonotope(self.clone())
    }

    /// Interval hull, `c ± |G|·1`.
    pub fn interval_hull(&self) -> IntervalVector {
        (0..self.dim())
            .map(|i| {
                let r: f64 = self.g.row(i).iter().map(|v| v.abs()).sum();
                Interval::new(self.c[i] - r, self.c[i] + r)
            })
            .collect()
    }
}

/// Converts a box into the zonotope `{diag(rad), mid}`.
pub fn box_to_zonotope(h: &IntervalVector) -> Zonotope {
    Zonotope {
        g: DMatrix::from_diagonal(&h.rad()),
        c: h.mid(),
    }
}

/// Order targets: at most `phi_c` constraints and `phi_g` generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReductionTargets {
    pub phi_c: usize,
    pub phi_g: usize,
}

impl ReductionTargets {
    pub fn new(phi_c: usize, phi_g: usize) -> Self {
        Self { phi_c, phi_g }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstrainedZonotope {
    g: DMatrix<f64>,
    c: DVector<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl From<Zonotope> for ConstrainedZonotope {
    fn from(z: Zonotope) -> Self {
        Self::from_zonotope(z)
    }
}

impl ConstrainedZonotope {
    pub fn new(g: DMatrix<f64>, c: DVector<f64>, a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        check_dim("ConstrainedZonotope (rows of G)", c.len(), g.nrows())?;
        check_dim("ConstrainedZonotope (columns of A)", g.ncols(), a.ncols())?;
        check_dim("ConstrainedZonotope (rows of A)", b.len(), a.nrows())?;
        Ok(Self { g, c, a, b })
    }

    pub fn from_zonotope(z: Zonotope) -> Self {
        let ng = z.g.ncols();
        Self {
            g: z.g,
            c: z.c,
            a: DMatrix::zeros(0, ng),
            b: DVector::zeros(0),
        }
    }

    /// Plain zonotope `{G, c}`.
    pub fn zonotope(g: DMatrix<f64>, c: DVector<f64>) -> Result<Self> {
        Zonotope::new(g, c).map(Self::from_zonotope)
    }

    /// A single point.
    pub fn point(c: DVector<f64>) -> Self {
        Self::from_zonotope(Zonotope::point(c))
    }

    /// `{diag(rad), mid}` of a box.
    pub fn from_box(h: &IntervalVector) -> Self {
        Self::from_zonotope(box_to_zonotope(h))
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn ng(&self) -> usize {
        self.g.ncols()
    }

    pub fn nh(&self) -> usize {
        self.a.nrows()
    }

    pub fn generators(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn constraints(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn offsets(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn is_zonotope(&self) -> bool {
        self.nh() == 0
    }

    /// Drops the constraints; the result is `{G, c}` and contains `self`.
    pub fn as_zonotope_relaxed(&self) -> Zonotope {
        Zonotope {
            g: self.g.clone(),
            c: self.c.clone(),
        }
    }

    /// `L·X ⊕ m`
    pub fn affine_map(&self, l: &DMatrix<f64>, m: &DVector<f64>) -> Result<Self> {
        check_dim("affine_map (columns of L)", self.dim(), l.ncols())?;
        check_dim("affine_map (offset)", l.nrows(), m.len())?;
        Ok(Self {
            g: l * &self.g,
            c: l * &self.c + m,
            a: self.a.clone(),
            b: self.b.clone(),
        })
    }

    pub fn linear_map(&self, l: &DMatrix<f64>) -> Result<Self> {
        self.affine_map(l, &DVector::zeros(l.nrows()))
    }

    pub fn translate(&self, m: &DVector<f64>) -> Result<Self> {
        check_dim("translate", self.dim(), m.len())?;
        let mut out = self.clone();
        out.c += m;
        Ok(out)
    }

    pub fn minkowski_sum(&self, other: &Self) -> Result<Self> {
        check_dim("minkowski_sum", self.dim(), other.dim())?;
        let (ng1, ng2) = (self.ng(), other.ng());
        let (nh1, nh2) = (self.nh(), other.nh());
        let n = self.dim();
        let mut g = DMatrix::zeros(n, ng1 + ng2);
        g.columns_mut(0, ng1).copy_from(&self.g);
        g.columns_mut(ng1, ng2).copy_from(&other.g);
        let a = block_diag(&self.a, &other.a);
        let b = stack(&self.b, &other.b);
        debug_assert_eq!(a.shape(), (nh1 + nh2, ng1 + ng2));
        Ok(Self {
            g,
            c: &self.c + &other.c,
            a,
            b,
        })
    }

    /// `{x ∈ self : M·x ∈ w}`.
    pub fn generalized_intersection(&self, w: &Self, m: &DMatrix<f64>) -> Result<Self> {
        check_dim("generalized_intersection (columns of M)", self.dim(), m.ncols())?;
        check_dim("generalized_intersection (rows of M)", w.dim(), m.nrows())?;
        let (ng, ngw) = (self.ng(), w.ng());
        let (nh, nhw) = (self.nh(), w.nh());
        let nw = w.dim();
        let mut g = DMatrix::zeros(self.dim(), ng + ngw);
        g.columns_mut(0, ng).copy_from(&self.g);
        let mut a = DMatrix::zeros(nh + nhw + nw, ng + ngw);
        a.view_mut((0, 0), (nh, ng)).copy_from(&self.a);
        a.view_mut((nh, ng), (nhw, ngw)).copy_from(&w.a);
        a.view_mut((nh + nhw, 0), (nw, ng)).copy_from(&(m * &self.g));
        a.view_mut((nh + nhw, ng), (nw, ngw)).copy_from(&(-&w.g));
        let mut b = DVector::zeros(nh + nhw + nw);
        b.rows_mut(0, nh).copy_from(&self.b);
        b.rows_mut(nh, nhw).copy_from(&w.b);
        b.rows_mut(nh + nhw, nw).copy_from(&(&w.c - m * &self.c));
        Ok(Self {
            g,
            c: self.c.clone(),
            a,
            b,
        })
    }

    /// Plain intersection `self ∩ other` (same space).
    pub fn intersection(&self, other: &Self) -> Result<Self> {
        self.generalized_intersection(other, &DMatrix::identity(self.dim(), self.dim()))
    }

    pub fn cartesian_product(&self, w: &Self) -> Self {
        let g = block_diag(&self.g, &w.g);
        let a = block_diag(&self.a, &w.a);
        Self {
            g,
            c: stack(&self.c, &w.c),
            a,
            b: stack(&self.b, &w.b),
        }
    }

    /// Removes generators whose columns in both `G` and `A` are exactly zero.
    pub fn prune_zero_generators(&self) -> Self {
        let keep: Vec<usize> = (0..self.ng())
            .filter(|&j| {
                self.g
                    .column(j)
                    .iter()
                    .chain(self.a.column(j).iter())
                    .any(|&v| v != 0.0)
            })
            .collect();
        if keep.len() == self.ng() {
            return self.clone();
        }
        Self {
            g: self.g.select_columns(&keep),
            c: self.c.clone(),
            a: self.a.select_columns(&keep),
            b: self.b.clone(),
        }
    }

    fn xi_program(&self, objective: DVector<f64>, sense: Sense) -> LinearProgram {
        let ng = self.ng();
        LinearProgram::new(
            objective,
            self.a.clone(),
            self.b.clone(),
            DVector::from_element(ng, -1.0),
            DVector::from_element(ng, 1.0),
            sense,
        )
        .expect("constrained zonotope program is well formed")
    }

    /// Interval hull via `2n` linear programs over `B(A, b)`.
    pub fn interval_hull(&self, solver: &mut SimplexSolver) -> Result<IntervalVector> {
        if self.nh() == 0 {
            return Ok(self.as_zonotope_relaxed().interval_hull());
        }
        let mut out = Vec::with_capacity(self.dim());
        for i in 0..self.dim() {
            let row = self.g.row(i).transpose();
            let lo = solver.solve(&self.xi_program(row.clone(), Sense::Minimize));
            if lo.status == LpStatus::Infeasible {
                return Err(Error::Empty);
            }
            if !lo.is_optimal() {
                return Err(Error::Lp(lo.status));
            }
            let hi = solver.solve(&self.xi_program(row, Sense::Maximize));
            if !hi.is_optimal() {
                return Err(Error::Lp(hi.status));
            }
            let (l, h) = (lo.objective_value + self.c[i], hi.objective_value + self.c[i]);
            out.push(Interval::new(l.min(h), h.max(l)));
        }
        Ok(IntervalVector::new(out))
    }

    /// The `ξ` attaining the minimum (or maximum) of `G_i·ξ` over `B(A, b)`.
    pub fn hull_witness(&self, axis: usize, sense: Sense, solver: &mut SimplexSolver) -> Result<DVector<f64>> {
        let sol = solver.solve(&self.xi_program(self.g.row(axis).transpose(), sense));
        match sol.status {
            LpStatus::Optimal => Ok(&self.g * sol.point + &self.c),
            LpStatus::Infeasible => Err(Error::Empty),
            s => Err(Error::Lp(s)),
        }
    }

    /// Minimum total residual `Σ|[G;A]ξ - [x-c; b]|` over `ξ ∈ [-1,1]^ng`.
    fn membership_residual(&self, x: &DVector<f64>, solver: &mut SimplexSolver) -> Option<(f64, f64)> {
        let (n, ng, nh) = (self.dim(), self.ng(), self.nh());
        let rows = n + nh;
        let nv = ng + 2 * rows;
        let mut a = DMatrix::zeros(rows, nv);
        a.view_mut((0, 0), (n, ng)).copy_from(&self.g);
        a.view_mut((n, 0), (nh, ng)).copy_from(&self.a);
        for i in 0..rows {
            a[(i, ng + i)] = 1.0;
            a[(i, ng + rows + i)] = -1.0;
        }
        let rhs = stack(&(x - &self.c), &self.b);
        let mut lower = DVector::zeros(nv);
        let mut upper = DVector::from_element(nv, f64::INFINITY);
        for j in 0..ng {
            lower[j] = -1.0;
            upper[j] = 1.0;
        }
        let mut obj = DVector::zeros(nv);
        obj.rows_mut(ng, 2 * rows).fill(1.0);
        let scale = 1.0 + rhs.amax() + self.g.amax();
        let lp = LinearProgram::new(obj, a, rhs, lower, upper, Sense::Minimize).ok()?;
        let sol = solver.solve(&lp);
        sol.is_optimal().then_some((sol.objective_value, scale))
    }

    /// Membership test; `x` counts as a member when the residual of the best
    /// `ξ` is within the solver's feasibility tolerance.
    pub fn contains_point(&self, x: &DVector<f64>, solver: &mut SimplexSolver) -> bool {
        let tol = solver.tolerances().feas;
        self.contains_point_tol(x, tol, solver)
    }

    /// Membership with an explicit relative tolerance.
    pub fn contains_point_tol(&self, x: &DVector<f64>, tol: f64, solver: &mut SimplexSolver) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match self.membership_residual(x, solver) {
            Some((res, scale)) => res <= tol * scale,
            None => false,
        }
    }

    /// Whether `B(A, b)` is empty.
    pub fn is_empty(&self, solver: &mut SimplexSolver) -> bool {
        if self.nh() == 0 {
            return false;
        }
        let lp = self.xi_program(DVector::zeros(self.ng()), Sense::Minimize);
        solver.solve(&lp).status == LpStatus::Infeasible
    }

    /// A member point: a random convex combination of 2–4 optimal vertices of
    /// `B(A, b)` for random objectives. Weights are skewed so that points near
    /// the vertices are drawn often.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R, solver: &mut SimplexSolver) -> Result<DVector<f64>> {
        let ng = self.ng();
        if ng == 0 {
            if self.b.amax() > solver.tolerances().feas {
                return Err(Error::Empty);
            }
            return Ok(self.c.clone());
        }
        let k = rng.random_range(2..=4);
        let mut xi = DVector::zeros(ng);
        let mut total = 0.0;
        for _ in 0..k {
            let obj = DVector::from_fn(ng, |_, _| rng.random_range(-1.0..1.0));
            let vertex = if self.nh() == 0 {
                obj.map(|v| if v < 0.0 { 1.0 } else { -1.0 })
            } else {
                let sol = solver.solve(&self.xi_program(obj, Sense::Minimize));
                match sol.status {
                    LpStatus::Optimal => sol.point,
                    LpStatus::Infeasible => return Err(Error::Empty),
                    s => return Err(Error::Lp(s)),
                }
            };
            let w: f64 = rng.random::<f64>().powi(4) + 1e-12;
            xi += vertex * w;
            total += w;
        }
        xi /= total;
        Ok(&self.g * xi + &self.c)
    }

    /// Lifted zonotope `{[G; A], [c; -b]}`; `self` is its slice at zero in
    /// the last `nh` coordinates.
    pub fn lifted(&self) -> Zonotope {
        Zonotope {
            g: vstack(&self.g, &self.a),
            c: stack(&self.c, &(-&self.b)),
        }
    }

    /// Outer approximation with at most `t.phi_c` constraints and `t.phi_g`
    /// generators. Returns `self` unchanged when it already meets the targets.
    pub fn reduce(&self, t: ReductionTargets, solver: &mut SimplexSolver) -> Result<Self> {
        let n = self.dim();
        if t.phi_g < n {
            return Err(Error::Invalid(format!(
                "generator target {} below the state dimension {n}",
                t.phi_g
            )));
        }
        if self.nh() <= t.phi_c && self.ng() <= t.phi_g {
            return Ok(self.clone());
        }
        if self.is_empty(solver) {
            return Err(Error::Empty);
        }
        // boxing in the lifted space needs n + nh <= phi_g
        let max_nh = t.phi_c.min(t.phi_g - n);
        let mut z = self.prune_zero_generators();
        if z.nh() > max_nh {
            z.precondition()?;
        }
        while z.nh() > max_nh {
            z.rescale()?;
            z.eliminate_best_constraint(solver);
            z.precondition()?;
        }
        if z.ng() > t.phi_g {
            z = z.reduce_generators(t.phi_g);
        }
        Ok(z)
    }

    /// Gauss–Jordan elimination with full pivoting on `[A | b]`. Dependent
    /// rows are dropped; an inconsistent dependent row means the set is empty.
    fn precondition(&mut self) -> Result<()> {
        let (nh, ng) = (self.nh(), self.ng());
        if nh == 0 {
            return Ok(());
        }
        let mut a = self.a.clone();
        let mut b = self.b.clone();
        let scale = a.amax().max(1e-300);
        let tol = 1e-10 * scale;
        let mut used_cols = vec![false; ng];
        let mut rank = 0;
        for r in 0..nh {
            // pivot: largest remaining entry in rows r.. and unused columns
            let mut best = (0.0, r, 0);
            for i in r..nh {
                for j in 0..ng {
                    if !used_cols[j] && a[(i, j)].abs() > best.0 {
                        best = (a[(i, j)].abs(), i, j);
                    }
                }
            }
            if best.0 <= tol {
                break;
            }
            let (_, pi, pj) = best;
            a.swap_rows(r, pi);
            b.swap_rows(r, pi);
            let p = a[(r, pj)];
            for j in 0..ng {
                a[(r, j)] /= p;
            }
            b[r] /= p;
            for i in 0..nh {
                if i != r {
                    let f = a[(i, pj)];
                    if f != 0.0 {
                        for j in 0..ng {
                            a[(i, j)] -= f * a[(r, j)];
                        }
                        a[(i, pj)] = 0.0;
                        b[i] -= f * b[r];
                    }
                }
            }
            used_cols[pj] = true;
            rank += 1;
        }
        let bscale = 1.0 + b.amax();
        if (rank..nh).any(|i| b[i].abs() > 1e-9 * bscale) {
            return Err(Error::Empty);
        }
        self.a = a.rows(0, rank).into_owned();
        self.b = b.rows(0, rank).into_owned();
        Ok(())
    }

    /// Tightens the bounds of every `ξ_j` with one sweep of interval
    /// constraint propagation over the rows of `Aξ = b`.
    fn contract_xi(&self) -> Result<Vec<Interval>> {
        let (nh, ng) = (self.nh(), self.ng());
        let mut bounds = vec![Interval::new(-1.0, 1.0); ng];
        for i in 0..nh {
            let (mut tlo, mut thi) = (0.0, 0.0);
            for k in 0..ng {
                let (p, q) = (self.a[(i, k)] * bounds[k].lo(), self.a[(i, k)] * bounds[k].hi());
                tlo += p.min(q);
                thi += p.max(q);
            }
            for j in 0..ng {
                let aij = self.a[(i, j)];
                if aij.abs() < 1e-12 {
                    continue;
                }
                let (p, q) = (aij * bounds[j].lo(), aij * bounds[j].hi());
                let rest_lo = tlo - p.min(q);
                let rest_hi = thi - p.max(q);
                let (e1, e2) = ((self.b[i] - rest_hi) / aij, (self.b[i] - rest_lo) / aij);
                let pad = 1e-12 * (1.0 + e1.abs().max(e2.abs()));
                let implied = Interval::new(e1.min(e2) - pad, e1.max(e2) + pad);
                match bounds[j].intersect(&implied) {
                    Some(v) => bounds[j] = v,
                    None if bounds[j].lo() - implied.hi() > 1e-9 || implied.lo() - bounds[j].hi() > 1e-9 => {
                        return Err(Error::Empty)
                    }
                    None => {
                        let m = 0.5 * (implied.lo().max(bounds[j].lo()) + implied.hi().min(bounds[j].hi()));
                        bounds[j] = Interval::point(m);
                    }
                }
            }
        }
        Ok(bounds)
    }

    /// Replaces `ξ ∈ [lo, hi]` by `ξ = mid + diag(rad)ξ'` with `ξ' ∈ [-1,1]`;
    /// variables fixed by the contraction are folded into `c` and `b`.
    fn rescale(&mut self) -> Result<()> {
        let bounds = self.contract_xi()?;
        let mid = DVector::from_iterator(bounds.len(), bounds.iter().map(Interval::mid));
        let rad = DVector::from_iterator(bounds.len(), bounds.iter().map(Interval::rad));
        self.c += &self.g * &mid;
        self.b -= &self.a * &mid;
        for j in 0..self.ng() {
            self.g.column_mut(j).scale_mut(rad[j]);
            self.a.column_mut(j).scale_mut(rad[j]);
        }
        *self = self.prune_zero_generators();
        Ok(())
    }

    /// Interval hull with `ξ_j`'s own bound dropped, which is the hull left
    /// after eliminating `ξ_j` through any row that contains it.
    fn hull_without_bound(&self, j: usize, solver: &mut SimplexSolver) -> Option<Vec<f64>> {
        const FREE: f64 = 1e6;
        let ng = self.ng();
        let mut lower = DVector::from_element(ng, -1.0);
        let mut upper = DVector::from_element(ng, 1.0);
        lower[j] = -FREE;
        upper[j] = FREE;
        let mut widths = Vec::with_capacity(self.dim());
        for k in 0..self.dim() {
            let obj = self.g.row(k).transpose();
            let mut ends = [0.0; 2];
            for (slot, sense) in [Sense::Minimize, Sense::Maximize].into_iter().enumerate() {
                let lp = LinearProgram::new(
                    obj.clone(),
                    self.a.clone(),
                    self.b.clone(),
                    lower.clone(),
                    upper.clone(),
                    sense,
                )
                .expect("constrained zonotope program is well formed");
                let sol = solver.solve(&lp);
                if !sol.is_optimal() {
                    return None;
                }
                ends[slot] = sol.objective_value;
            }
            widths.push(ends[1] - ends[0]);
        }
        Some(widths)
    }

    /// Solves one constraint for one `ξ_j` and substitutes it everywhere.
    ///
    /// Columns whose bound is slack at every hull optimum can be freed
    /// without changing the hull. If there are none, each column is scored by
    /// the relative growth of the hull widths once its bound is dropped.
    /// Among the columns of least hull growth the smallest interval excess
    /// wins, then the lowest index. The pivot row has the largest entry in
    /// that column relative to the row's largest entry.
    fn eliminate_best_constraint(&mut self, solver: &mut SimplexSolver) {
        let (nh, ng) = (self.nh(), self.ng());
        let row_max: Vec<f64> = (0..nh).map(|i| self.a.row(i).amax()).collect();
        let pivot_row = |z: &Self, j: usize| {
            (0..nh)
                .filter(|&i| z.a[(i, j)].abs() > 1e-6 * row_max[i] && z.a[(i, j)].abs() >= 1e-12)
                .map(|i| (z.a[(i, j)].abs() / row_max[i], i))
                .max_by(|x, y| x.0.total_cmp(&y.0))
                .map(|(_, i)| i)
        };
        let mut base = Some(Vec::with_capacity(self.dim()));
        let mut slack = vec![true; ng];
        for k in 0..self.dim() {
            let obj = self.g.row(k).transpose();
            let lo = solver.solve(&self.xi_program(obj.clone(), Sense::Minimize));
            let hi = solver.solve(&self.xi_program(obj, Sense::Maximize));
            if !lo.is_optimal() || !hi.is_optimal() {
                base = None;
                break;
            }
            for w in [&lo.point, &hi.point] {
                for (s, v) in slack.iter_mut().zip(w.iter()) {
                    *s &= v.abs() < 1.0 - 1e-7;
                }
            }
            if let Some(b) = base.as_mut() {
                b.push(hi.objective_value - lo.objective_value);
            }
        }
        let candidates: Vec<(usize, usize)> = (0..ng).filter_map(|j| pivot_row(self, j).map(|i| (j, i))).collect();
        // (hull growth, interval excess, column, row)
        let mut pool: Vec<(f64, f64, usize, usize)> = Vec::new();
        if base.is_some() && candidates.iter().any(|&(j, _)| slack[j]) {
            pool.extend(
                candidates
                    .iter()
                    .filter(|&&(j, _)| slack[j])
                    .map(|&(j, i)| (0.0, self.interval_excess(j), j, i)),
            );
        } else {
            for &(j, i) in &candidates {
                let growth = match (&base, self.hull_without_bound(j, solver)) {
                    (Some(w0), Some(w1)) => w0
                        .iter()
                        .zip(&w1)
                        .map(|(a, b)| ((b - a) / a.max(1e-12)).max(0.0))
                        .sum::<f64>(),
                    _ => f64::INFINITY,
                };
                pool.push((growth, self.interval_excess(j), j, i));
            }
        }
        let least = pool.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
        let best = pool
            .iter()
            .filter(|c| c.0 <= least + 1e-9)
            .fold(None::<&(f64, f64, usize, usize)>, |acc, c| match acc {
                Some(b) if b.1 <= c.1 => Some(b),
                _ => Some(c),
            });
        let Some(&(_, _, j, i)) = best else {
            // only numerically zero rows remain
            self.a = DMatrix::zeros(0, ng);
            self.b = DVector::zeros(0);
            return;
        };
        *self = self.eliminate_pair(i, j);
    }

    /// How far the range of `ξ_j` implied by the rows, with every other
    /// variable in `[-1, 1]`, sticks out of `[-1, 1]`. Zero means dropping
    /// `ξ_j`'s own bound loses nothing.
    fn interval_excess(&self, j: usize) -> f64 {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..self.nh() {
            let aij = self.a[(i, j)];
            if aij.abs() < 1e-12 {
                continue;
            }
            let rest: f64 = self.a.row(i).iter().map(|v| v.abs()).sum::<f64>() - aij.abs();
            let (e1, e2) = ((self.b[i] - rest) / aij, (self.b[i] + rest) / aij);
            lo = lo.max(e1.min(e2));
            hi = hi.min(e1.max(e2));
        }
        ((-lo).max(hi) - 1.0).max(0.0)
    }

    fn eliminate_pair(&self, i: usize, j: usize) -> Self {
        let (nh, ng) = (self.nh(), self.ng());
        let mut out = self.clone();
        let s = &mut out;
        let aij = s.a[(i, j)];
        let arow = s.a.row(i).into_owned();
        let bi = s.b[i];
        let lg = s.g.column(j) / aij;
        let la = s.a.column(j) / aij;
        s.g -= &lg * &arow;
        s.c += &lg * bi;
        s.a -= &la * &arow;
        s.b -= &la * bi;
        let keep_cols: Vec<usize> = (0..ng).filter(|&k| k != j).collect();
        let keep_rows: Vec<usize> = (0..nh).filter(|&k| k != i).collect();
        s.g = s.g.select_columns(&keep_cols);
        s.a = s.a.select_rows(&keep_rows).select_columns(&keep_cols);
        s.b = s.b.select_rows(&keep_rows);
        out
    }

    /// Generator reduction in the lifted space `{[G; A], [c; -b]}`.
    fn reduce_generators(&self, phi_g: usize) -> Self {
        let (n, nh) = (self.dim(), self.nh());
        // rows are normalized so that state and constraint coordinates weigh alike
        let mut lifted = vstack(&self.g, &self.a);
        let scale: Vec<f64> = lifted
            .row_iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .map(|s| if s > 0.0 { s } else { 1.0 })
            .collect();
        for (i, s) in scale.iter().enumerate() {
            lifted.row_mut(i).unscale_mut(*s);
        }
        let mut reduced = reduce_lifted_generators(&lifted, phi_g);
        for (i, s) in scale.iter().enumerate() {
            reduced.row_mut(i).scale_mut(*s);
        }
        Self {
            g: reduced.rows(0, n).into_owned(),
            c: self.c.clone(),
            a: reduced.rows(n, nh).into_owned(),
            b: self.b.clone(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "cz n={} ng={} nh={}", self.dim(), self.ng(), self.nh());
        write_matrix(&mut s, &self.g);
        for v in self.c.iter() {
            let _ = writeln!(s, "{}", fmt17(*v));
        }
        write_matrix(&mut s, &self.a);
        for v in self.b.iter() {
            let _ = writeln!(s, "{}", fmt17(*v));
        }
        s
    }

    /// Parses every `cz` record in `text`. Lines starting with `#` are ignored.
    pub fn parse_all(text: &str) -> Result<Vec<Self>> {
        let mut tokens = text
            .lines()
            .filter(|l| !l.trim_start().starts_with('#'))
            .flat_map(str::split_whitespace)
            .peekable();
        let mut out = Vec::new();
        while let Some(tok) = tokens.next() {
            if tok != "cz" {
                return Err(Error::Parse(format!("expected `cz` header, found `{tok}`")));
            }
            let mut dims = [0usize; 3];
            for (slot, key) in dims.iter_mut().zip(["n", "ng", "nh"]) {
                let t = tokens.next().ok_or_else(|| Error::Parse("truncated header".into()))?;
                let v = t
                    .strip_prefix(key)
                    .and_then(|r| r.strip_prefix('='))
                    .ok_or_else(|| Error::Parse(format!("expected `{key}=`, found `{t}`")))?;
                *slot = v.parse().map_err(|_| Error::Parse(format!("bad integer in `{t}`")))?;
            }
            let [n, ng, nh] = dims;
            let mut take = |count: usize| -> Result<Vec<f64>> {
                (0..count)
                    .map(|_| {
                        let t = tokens.next().ok_or_else(|| Error::Parse("truncated record".into()))?;
                        t.parse::<f64>().map_err(|_| Error::Parse(format!("bad number `{t}`")))
                    })
                    .collect()
            };
            let g = DMatrix::from_row_slice(n, ng, &take(n * ng)?);
            let c = DVector::from_vec(take(n)?);
            let a = DMatrix::from_row_slice(nh, ng, &take(nh * ng)?);
            let b = DVector::from_vec(take(nh)?);
            out.push(Self::new(g, c, a, b)?);
        }
        Ok(out)
    }
}

/// Parallelotope (exactly `n` generators) containing `z`.
pub fn zonotope_reduce_to_parallelotope(z: &Zonotope) -> Zonotope {
    Zonotope {
        g: reduce_lifted_generators(&z.g, z.dim()),
        c: z.c.clone(),
    }
}

/// Reduces the generator matrix `g` (`d × m`) to `target >= d` columns whose
/// zonotope contains the original one.
///
/// A basis `T` of `d` dominant generators is picked greedily by 2-norm.
/// Generators are scored in `T` coordinates by `‖T⁻¹g‖₂ − ‖T⁻¹g‖∞`; the
/// `m - target + d` lowest scores are boxed into `T·diag(Σ|T⁻¹g|)` and the
/// rest are kept. Ties go to the lowest column index.
fn reduce_lifted_generators(g: &DMatrix<f64>, target: usize) -> DMatrix<f64> {
    let (d, m) = g.shape();
    assert!(target >= d, "generator target below the lifted dimension");
    if m <= target && m >= d {
        return g.clone();
    }
    let basis = dominant_basis(g);
    let lu = basis.clone().lu();
    let coords = lu.solve(g).unwrap_or_else(|| DMatrix::zeros(d, m));
    let keep_count = if m > target { target - d } else { 0 };

    let mut order: Vec<usize> = (0..m).collect();
    let score = |j: usize| {
        let col = coords.column(j);
        col.norm() - col.amax()
    };
    let scores: Vec<f64> = (0..m).map(score).collect();
    order.sort_by(|&p, &q| scores[p].total_cmp(&scores[q]).then(p.cmp(&q)));
    let boxed = &order[..m - keep_count];
    let mut kept: Vec<usize> = order[m - keep_count..].to_vec();
    kept.sort_unstable();

    let mut widths = DVector::zeros(d);
    for &j in boxed {
        widths += coords.column(j).abs();
    }
    // slack for the round trip T·(T⁻¹g)
    widths = widths.map(|w| w * (1.0 + 1e-12) + 1e-15);
    let mut out = DMatrix::zeros(d, d + kept.len());
    for k in 0..d {
        out.set_column(k, &(basis.column(k) * widths[k]));
    }
    for (slot, &j) in kept.iter().enumerate() {
        out.set_column(d + slot, &g.column(j));
    }
    out
}

/// Greedy selection of `d` well-conditioned columns of `g`, largest 2-norm
/// first. Missing directions are filled with `ε·e_k`, `ε = 1e-10·max|g|`.
fn dominant_basis(g: &DMatrix<f64>) -> DMatrix<f64> {
    let (d, m) = g.shape();
    let gmax = g.amax();
    let eps = if gmax > 0.0 { 1e-10 * gmax } else { 1e-10 };
    let mut order: Vec<usize> = (0..m).collect();
    let norms: Vec<f64> = (0..m).map(|j| g.column(j).norm()).collect();
    order.sort_by(|&p, &q| norms[q].total_cmp(&norms[p]).then(p.cmp(&q)));

    let mut chosen: Vec<DVector<f64>> = Vec::new();
    let mut ortho: Vec<DVector<f64>> = Vec::new();
    for threshold in [0.1, 1e-6] {
        for &j in &order {
            if chosen.len() == d || norms[j] == 0.0 {
                break;
            }
            let v = g.column(j).into_owned();
            if chosen.contains(&v) {
                continue;
            }
            let mut r = v.clone();
            for q in &ortho {
                r -= q * q.dot(&r);
            }
            if r.norm() > threshold * norms[j] {
                ortho.push(&r / r.norm());
                chosen.push(v);
            }
        }
    }
    // fill missing directions with scaled unit vectors
    while chosen.len() < d {
        let mut best = (0.0, 0);
        for k in 0..d {
            let mut e = DVector::zeros(d);
            e[k] = 1.0;
            for q in &ortho {
                e -= q * q.dot(&e);
            }
            if e.norm() > best.0 {
                best = (e.norm(), k);
            }
        }
        let mut e = DVector::zeros(d);
        e[best.1] = 1.0;
        let mut r = e.clone();
        for q in &ortho {
            r -= q * q.dot(&r);
        }
        ortho.push(&r / r.norm());
        chosen.push(e * eps);
    }
    let mut t = DMatrix::zeros(d, d);
    for (k, v) in chosen.iter().enumerate() {
        t.set_column(k, v);
    }
    // near-singular blocks get the εI regularization
    if t.clone().lu().determinant().abs() < f64::MIN_POSITIVE.sqrt() {
        t += DMatrix::identity(d, d) * eps;
    }
    t
}

pub(crate) fn block_diag(x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    let (r1, c1) = x.shape();
    let (r2, c2) = y.shape();
    let mut out = DMatrix::zeros(r1 + r2, c1 + c2);
    out.view_mut((0, 0), (r1, c1)).copy_from(x);
    out.view_mut((r1, c1), (r2, c2)).copy_from(y);
    out
}

pub(crate) fn stack(x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(x.len() + y.len(), x.iter().chain(y.iter()).copied())
}

pub(crate) fn vstack(x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(x.ncols(), y.ncols());
    let mut out = DMatrix::zeros(x.nrows() + y.nrows(), x.ncols());
    out.rows_mut(0, x.nrows()).copy_from(x);
    out.rows_mut(x.nrows(), y.nrows()).copy_from(y);
    out
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_matrix(s: &mut String, m: &DMatrix<f64>) {
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|v| fmt17(*v)).collect();
        let _ = writeln!(s, "{}", row.join(" "));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn eye(n: usize) -> DMatrix<f64> {
        DMatrix::identity(n, n)
    }

    fn unit_box(n: usize) -> ConstrainedZonotope {
        ConstrainedZonotope::zonotope(eye(n), DVector::zeros(n)).unwrap()
    }

    fn diag_cz() -> ConstrainedZonotope {
        ConstrainedZonotope::new(
            eye(2),
            DVector::zeros(2),
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            DVector::from_element(1, 1.0),
        )
        .unwrap()
    }

    fn assert_hull(h: &IntervalVector, expect: &[(f64, f64)]) {
        assert_eq!(h.len(), expect.len());
        for (iv, &(l, u)) in h.iter().zip(expect) {
            assert!(
                (iv.lo() - l).abs() < 1e-9 && (iv.hi() - u).abs() < 1e-9,
                "{h:?} vs {expect:?}"
            );
        }
    }

    #[test]
    fn affine_map_examples() {
        let mut lp = SimplexSolver::default();
        let x = diag_cz();
        assert_eq!(x.affine_map(&eye(2), &DVector::zeros(2)).unwrap(), x);
        let y = unit_box(2)
            .affine_map(&(eye(2) * 2.0), &DVector::from_element(2, 1.0))
            .unwrap();
        assert_hull(&y.interval_hull(&mut lp).unwrap(), &[(-1.0, 3.0), (-1.0, 3.0)]);
        let p = x
            .affine_map(&DMatrix::from_row_slice(1, 2, &[1.0, 0.0]), &DVector::zeros(1))
            .unwrap();
        assert_hull(&p.interval_hull(&mut lp).unwrap(), &[(0.0, 1.0)]);
    }

    #[test]
    fn affine_map_dimension_mismatch() {
        let r = unit_box(2).affine_map(&eye(3), &DVector::zeros(3));
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn minkowski_examples() {
        let mut lp = SimplexSolver::default();
        let s = unit_box(2).minkowski_sum(&unit_box(2)).unwrap();
        assert_hull(&s.interval_hull(&mut lp).unwrap(), &[(-2.0, 2.0), (-2.0, 2.0)]);
        let p = ConstrainedZonotope::point(DVector::from_vec(vec![3.0, -1.0]));
        let t = diag_cz().minkowski_sum(&p).unwrap();
        assert_hull(&t.interval_hull(&mut lp).unwrap(), &[(3.0, 4.0), (-1.0, 0.0)]);
        assert!(unit_box(2).minkowski_sum(&unit_box(3)).is_err());
    }

    #[test]
    fn intersection_examples() {
        let mut lp = SimplexSolver::default();
        let strip =
            ConstrainedZonotope::zonotope(DMatrix::from_element(1, 1, 0.5), DVector::from_element(1, 1.0)).unwrap();
        let m = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let r = unit_box(2).generalized_intersection(&strip, &m).unwrap();
        assert_eq!((r.ng(), r.nh()), (3, 1));
        assert_hull(&r.interval_hull(&mut lp).unwrap(), &[(0.5, 1.0), (-1.0, 1.0)]);

        let huge = ConstrainedZonotope::zonotope(eye(2) * 100.0, DVector::zeros(2)).unwrap();
        let v = diag_cz().intersection(&huge).unwrap();
        assert_hull(&v.interval_hull(&mut lp).unwrap(), &[(0.0, 1.0), (0.0, 1.0)]);

        let far = ConstrainedZonotope::point(DVector::from_vec(vec![10.0, 0.0]));
        let e = unit_box(2).intersection(&far).unwrap();
        assert!(e.is_empty(&mut lp));
        assert!(matches!(e.interval_hull(&mut lp), Err(Error::Empty)));
    }

    #[test]
    fn cartesian_examples() {
        let p = unit_box(2).cartesian_product(&unit_box(1));
        assert_eq!(p, unit_box(3));
        let q = unit_box(2).cartesian_product(&ConstrainedZonotope::point(DVector::from_vec(vec![7.0])));
        let mut lp = SimplexSolver::default();
        assert_hull(
            &q.interval_hull(&mut lp).unwrap(),
            &[(-1.0, 1.0), (-1.0, 1.0), (7.0, 7.0)],
        );
    }

    #[test]
    fn hull_examples() {
        let mut lp = SimplexSolver::default();
        let x0 = ConstrainedZonotope::zonotope(eye(4) * 0.18, DVector::from_vec(vec![0.1, 0.9, 0.1, 0.1])).unwrap();
        let h = x0.interval_hull(&mut lp).unwrap();
        for (iv, c) in h.iter().zip([0.1, 0.9, 0.1, 0.1]) {
            assert!((iv.lo() - (c - 0.18)).abs() < 1e-15 && (iv.hi() - (c + 0.18)).abs() < 1e-15);
        }
        assert_hull(&diag_cz().interval_hull(&mut lp).unwrap(), &[(0.0, 1.0), (0.0, 1.0)]);
    }

    #[test]
    fn box_conversion() {
        let h = IntervalVector::new(vec![Interval::new(-1.0, 1.0); 2]);
        let z = box_to_zonotope(&h);
        assert_eq!(z.generators(), &eye(2));
        assert_eq!(z.center(), &DVector::zeros(2));
        let z = box_to_zonotope(&IntervalVector::new(vec![Interval::new(0.0, 1.0)]));
        assert_eq!((z.generators()[(0, 0)], z.center()[0]), (0.5, 0.5));
        let h = IntervalVector::new(vec![Interval::new(-2.0, 0.5), Interval::new(1.0, 4.0)]);
        assert_eq!(box_to_zonotope(&h).interval_hull(), h);
    }

    #[test]
    fn membership_examples() {
        let mut lp = SimplexSolver::default();
        let z = unit_box(2);
        assert!(z.contains_point(&DVector::zeros(2), &mut lp));
        assert!(z.contains_point(&DVector::from_vec(vec![1.0, 0.3]), &mut lp));
        assert!(!z.contains_point(&DVector::from_vec(vec![1.1, 0.0]), &mut lp));
        assert!(!diag_cz().contains_point(&DVector::from_vec(vec![0.9, 0.9]), &mut lp));
        assert!(diag_cz().contains_point(&DVector::from_vec(vec![0.25, 0.75]), &mut lp));
    }

    #[test]
    fn emptiness_examples() {
        let mut lp = SimplexSolver::default();
        assert!(!unit_box(2).is_empty(&mut lp));
        let mk = |b: f64| {
            ConstrainedZonotope::new(
                eye(2),
                DVector::zeros(2),
                DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
                DVector::from_element(1, b),
            )
            .unwrap()
        };
        assert!(mk(3.0).is_empty(&mut lp));
        assert!(!mk(2.0).is_empty(&mut lp));
        assert!(!mk(3.0).contains_point(&DVector::from_vec(vec![1.0, 1.0]), &mut lp));
    }

    #[test]
    fn sampling_examples() {
        let mut lp = SimplexSolver::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let x = unit_box(2).sample_point(&mut rng, &mut lp).unwrap();
            assert!(x.amax() <= 1.0 + 1e-12);
        }
        let p = ConstrainedZonotope::point(DVector::from_vec(vec![1.0, 2.0]));
        assert_eq!(
            p.sample_point(&mut rng, &mut lp).unwrap(),
            DVector::from_vec(vec![1.0, 2.0])
        );
        let e = unit_box(2)
            .intersection(&ConstrainedZonotope::point(DVector::from_vec(vec![5.0, 0.0])))
            .unwrap();
        assert!(matches!(e.sample_point(&mut rng, &mut lp), Err(Error::Empty)));
    }

    #[test]
    fn reduce_noop_within_targets() {
        let mut lp = SimplexSolver::default();
        let x = diag_cz();
        assert_eq!(x.reduce(ReductionTargets::new(1, 2), &mut lp).unwrap(), x);
        assert!(x.reduce(ReductionTargets::new(1, 1), &mut lp).is_err());
    }

    #[test]
    fn reduce_segment_to_zonotope() {
        let mut lp = SimplexSolver::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = ConstrainedZonotope::new(
            eye(2),
            DVector::zeros(2),
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            DVector::zeros(1),
        )
        .unwrap();
        let r = x.reduce(ReductionTargets::new(0, 2), &mut lp).unwrap();
        assert_eq!(r.nh(), 0);
        for _ in 0..500 {
            let p = x.sample_point(&mut rng, &mut lp).unwrap();
            assert!(r.contains_point(&p, &mut lp));
        }
        // the segment is exactly representable with one generator
        let h = r.interval_hull(&mut lp).unwrap();
        assert_hull(&h, &[(-1.0, 1.0), (-1.0, 1.0)]);
    }

    #[test]
    fn reduce_detects_emptiness() {
        let mut lp = SimplexSolver::default();
        let e = unit_box(2)
            .intersection(&ConstrainedZonotope::point(DVector::from_vec(vec![5.0, 0.0])))
            .unwrap();
        assert!(matches!(
            e.reduce(ReductionTargets::new(0, 2), &mut lp),
            Err(Error::Empty)
        ));
    }

    #[test]
    fn parallelotope_examples() {
        let z = Zonotope::new(eye(2), DVector::zeros(2)).unwrap();
        assert_eq!(zonotope_reduce_to_parallelotope(&z).generators().shape(), (2, 2));
        let p = zonotope_reduce_to_parallelotope(&z);
        assert!((p.generators() - eye(2)).amax() < 1e-12);

        let z = Zonotope::new(
            DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0]),
            DVector::zeros(2),
        )
        .unwrap();
        let p = zonotope_reduce_to_parallelotope(&z).to_cz();
        assert_eq!(p.ng(), 2);
        let mut lp = SimplexSolver::default();
        for s in 0..8u32 {
            let sig = DVector::from_fn(3, |k, _| if s >> k & 1 == 1 { 1.0 } else { -1.0 });
            let v = z.generators() * sig;
            assert!(p.contains_point(&v, &mut lp), "extreme point {v:?} missing");
        }

        let eps = 1e-3;
        let z = Zonotope::new(
            DMatrix::from_row_slice(2, 3, &[1.0, 0.0, eps, 0.0, 2.0, eps]),
            DVector::zeros(2),
        )
        .unwrap();
        let p = zonotope_reduce_to_parallelotope(&z);
        let h = p.interval_hull();
        assert!((h[0].hi() - (1.0 + eps)).abs() < 1e-9 && (h[1].hi() - (2.0 + eps)).abs() < 1e-9);
    }

    #[test]
    fn rank_deficient_parallelotope() {
        let z = Zonotope::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 1.0, 2.0]), DVector::zeros(2)).unwrap();
        let p = zonotope_reduce_to_parallelotope(&z);
        assert_eq!(p.ng(), 2);
        assert!(p.generators().iter().all(|v| v.is_finite()));
        let mut lp = SimplexSolver::default();
        assert!(p.to_cz().contains_point(&DVector::from_vec(vec![3.0, 3.0]), &mut lp));
    }

    #[test]
    fn text_roundtrip() {
        let x = diag_cz().minkowski_sum(&unit_box(2)).unwrap();
        let p = ConstrainedZonotope::point(DVector::from_vec(vec![0.1, -2.5]));
        let text = format!("# two sets\n{}{}", x.to_text(), p.to_text());
        let back = ConstrainedZonotope::parse_all(&text).unwrap();
        assert_eq!(back, vec![x, p]);
        assert!(ConstrainedZonotope::parse_all("cz n=2 ng=1 nh=0\n1.0\n").is_err());
        assert!(ConstrainedZonotope::parse_all("zono n=1").is_err());
    }
}
