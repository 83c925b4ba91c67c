//! Difference-of-convex decompositions and the enclosures built on them.
//!
//! For `ρ = ρᵃ − ρᵇ` with convex parts, the linearization error
//! `e(z) = ρ(z) − ρ(z̄) − ∇ρ(z̄)(z − z̄)` over a polytope `P` is bounded by
//! evaluating convex and concave expressions at the vertices of `P` only.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::czset::{box_to_zonotope, ConstrainedZonotope, ReductionTargets, Zonotope};
use crate::error::{check_dim, Error, Result};
use crate::interval::{Interval, IntervalMatrix, IntervalVector};
use crate::lp::{LinearProgram, LpStatus, Sense, SimplexSolver};

/// Largest polytope dimension for which vertices are enumerated.
pub const DEFAULT_VERTEX_CAP: usize = 16;

/// A twice differentiable map `ρ: ℝⁿ → ℝᵐ`.
pub trait DifferentiableMap: Send + Sync {
    fn dim_in(&self) -> usize;

    fn dim_out(&self) -> usize;

    fn eval(&self, z: &DVector<f64>) -> DVector<f64>;

    /// `m × n` Jacobian at `z`.
    fn jacobian(&self, z: &DVector<f64>) -> DMatrix<f64>;

    /// Interval enclosure of the Hessian of component `i` over `bx`.
    fn interval_hessian(&self, i: usize, _bx: &IntervalVector) -> Result<IntervalMatrix> {
        Err(Error::HessianUnavailable(i))
    }

    /// Affine maps linearize exactly, so their remainder is skipped.
    fn is_affine(&self) -> bool {
        false
    }
}

type EvalFn = dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync;
type JacFn = dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync;
type HessFn = dyn Fn(usize, &IntervalVector) -> IntervalMatrix + Send + Sync;

/// A [`DifferentiableMap`] assembled from closures.
pub struct FnMap {
    n: usize,
    m: usize,
    eval: Box<EvalFn>,
    jac: Box<JacFn>,
    hess: Option<Box<HessFn>>,
    affine: bool,
}

impl FnMap {
    pub fn new(
        n: usize,
        m: usize,
        eval: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        jac: impl Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            n,
            m,
            eval: Box::new(eval),
            jac: Box::new(jac),
            hess: None,
            affine: false,
        }
    }

    /// `z ↦ L z + d`.
    pub fn affine(l: DMatrix<f64>, d: DVector<f64>) -> Self {
        let (m, n) = l.shape();
        let lj = l.clone();
        let mut out = Self::new(n, m, move |z| &l * z + &d, move |_| lj.clone());
        out.hess = Some(Box::new(move |_, _| IntervalMatrix::zeros(n, n)));
        out.affine = true;
        out
    }

    pub fn with_hessian(
        mut self,
        hess: impl Fn(usize, &IntervalVector) -> IntervalMatrix + Send + Sync + 'static,
    ) -> Self {
        self.hess = Some(Box::new(hess));
        self
    }

    pub fn mark_affine(mut self) -> Self {
        self.affine = true;
        self
    }
}

impl DifferentiableMap for FnMap {
    fn dim_in(&self) -> usize {
        self.n
    }

    fn dim_out(&self) -> usize {
        self.m
    }

    fn eval(&self, z: &DVector<f64>) -> DVector<f64> {
        (self.eval)(z)
    }

    fn jacobian(&self, z: &DVector<f64>) -> DMatrix<f64> {
        (self.jac)(z)
    }

    fn interval_hessian(&self, i: usize, bx: &IntervalVector) -> Result<IntervalMatrix> {
        match &self.hess {
            Some(h) if i < self.m => Ok(h(i, bx)),
            _ => Err(Error::HessianUnavailable(i)),
        }
    }

    fn is_affine(&self) -> bool {
        self.affine
    }
}

/// `ρ` restricted to the coordinates `active`, the others held at `base`.
pub struct Restricted {
    inner: Arc<dyn DifferentiableMap>,
    active: Vec<usize>,
    base: DVector<f64>,
}

impl Restricted {
    pub fn new(inner: Arc<dyn DifferentiableMap>, active: Vec<usize>, base: DVector<f64>) -> Result<Self> {
        check_dim("Restricted (base point)", inner.dim_in(), base.len())?;
        if active.iter().any(|&k| k >= base.len()) {
            return Err(Error::Invalid("active index out of range".into()));
        }
        Ok(Self { inner, active, base })
    }

    pub fn embed(&self, z: &DVector<f64>) -> DVector<f64> {
        let mut full = self.base.clone();
        for (slot, &k) in self.active.iter().enumerate() {
            full[k] = z[slot];
        }
        full
    }

    fn embed_box(&self, bx: &IntervalVector) -> IntervalVector {
        let mut full: Vec<Interval> = self.base.iter().map(|&v| Interval::point(v)).collect();
        for (slot, &k) in self.active.iter().enumerate() {
            full[k] = bx[slot];
        }
        IntervalVector::new(full)
    }
}

impl DifferentiableMap for Restricted {
    fn dim_in(&self) -> usize {
        self.active.len()
    }

    fn dim_out(&self) -> usize {
        self.inner.dim_out()
    }

    fn eval(&self, z: &DVector<f64>) -> DVector<f64> {
        self.inner.eval(&self.embed(z))
    }

    fn jacobian(&self, z: &DVector<f64>) -> DMatrix<f64> {
        self.inner.jacobian(&self.embed(z)).select_columns(&self.active)
    }

    fn interval_hessian(&self, i: usize, bx: &IntervalVector) -> Result<IntervalMatrix> {
        let h = self.inner.interval_hessian(i, &self.embed_box(bx))?;
        let k = self.active.len();
        Ok(IntervalMatrix::from_fn(k, k, |r, c| {
            h.get(self.active[r], self.active[c])
        }))
    }

    fn is_affine(&self) -> bool {
        self.inner.is_affine()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Provenance {
    Explicit,
    /// Shift `λ̃ ≥ 0` per component.
    Convexified(DVector<f64>),
}

/// `ρ = ρᵃ − ρᵇ` with every component of `ρᵃ`, `ρᵇ` convex.
#[derive(Clone)]
pub struct DcDecomposition {
    pub a: Arc<dyn DifferentiableMap>,
    pub b: Arc<dyn DifferentiableMap>,
    pub provenance: Provenance,
}

impl DcDecomposition {
    pub fn explicit(a: Arc<dyn DifferentiableMap>, b: Arc<dyn DifferentiableMap>) -> Result<Self> {
        check_dim("DcDecomposition (inputs)", a.dim_in(), b.dim_in())?;
        check_dim("DcDecomposition (outputs)", a.dim_out(), b.dim_out())?;
        Ok(Self {
            a,
            b,
            provenance: Provenance::Explicit,
        })
    }

    /// Restricts both parts to the coordinates `active`; convexity survives
    /// restriction to an affine slice.
    pub fn restrict(&self, active: &[usize], base: &DVector<f64>) -> Result<Self> {
        Ok(Self {
            a: Arc::new(Restricted::new(self.a.clone(), active.to_vec(), base.clone())?),
            b: Arc::new(Restricted::new(self.b.clone(), active.to_vec(), base.clone())?),
            provenance: self.provenance.clone(),
        })
    }
}

/// `ρ + (λ̃/2)·zᵀz` per component.
struct ShiftedMap {
    rho: Arc<dyn DifferentiableMap>,
    lambda: DVector<f64>,
}

impl DifferentiableMap for ShiftedMap {
    fn dim_in(&self) -> usize {
        self.rho.dim_in()
    }

    fn dim_out(&self) -> usize {
        self.rho.dim_out()
    }

    fn eval(&self, z: &DVector<f64>) -> DVector<f64> {
        let q = 0.5 * z.norm_squared();
        self.rho.eval(z) + &self.lambda * q
    }

    fn jacobian(&self, z: &DVector<f64>) -> DMatrix<f64> {
        self.rho.jacobian(z) + &self.lambda * z.transpose()
    }

    fn interval_hessian(&self, i: usize, bx: &IntervalVector) -> Result<IntervalMatrix> {
        let mut h = self.rho.interval_hessian(i, bx)?;
        for k in 0..self.dim_in() {
            let v = h.get(k, k) + self.lambda[i];
            h.set(k, k, v);
        }
        Ok(h)
    }
}

/// `(λ̃/2)·zᵀz` per component.
struct QuadraticMap {
    n: usize,
    lambda: DVector<f64>,
}

impl DifferentiableMap for QuadraticMap {
    fn dim_in(&self) -> usize {
        self.n
    }

    fn dim_out(&self) -> usize {
        self.lambda.len()
    }

    fn eval(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.lambda * (0.5 * z.norm_squared())
    }

    fn jacobian(&self, z: &DVector<f64>) -> DMatrix<f64> {
        &self.lambda * z.transpose()
    }

    fn interval_hessian(&self, i: usize, _bx: &IntervalVector) -> Result<IntervalMatrix> {
        Ok(IntervalMatrix::from_point(
            DMatrix::identity(self.n, self.n) * self.lambda[i],
        ))
    }
}

/// Interval Gershgorin bound on the smallest eigenvalue of every symmetric
/// matrix in `h`.
pub fn eig_lower_bound(h: &IntervalMatrix) -> f64 {
    let (n, _) = h.shape();
    (0..n)
        .map(|i| {
            let off: f64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| h.lower()[(i, j)].abs().max(h.upper()[(i, j)].abs()))
                .sum();
            h.lower()[(i, i)] - off
        })
        .fold(f64::INFINITY, f64::min)
}

/// DC split of `rho` valid on `bx`: `ρᵇᵢ = (λ̃ᵢ/2)·zᵀz` with `λ̃ᵢ` large
/// enough to make `ρᵢ + ρᵇᵢ` convex.
pub fn convexify(rho: Arc<dyn DifferentiableMap>, bx: &IntervalVector) -> Result<DcDecomposition> {
    check_dim("convexify (box)", rho.dim_in(), bx.len())?;
    let m = rho.dim_out();
    let mut lambda = DVector::zeros(m);
    for i in 0..m {
        let h = rho.interval_hessian(i, bx)?;
        lambda[i] = (-eig_lower_bound(&h)).max(0.0);
    }
    let n = rho.dim_in();
    Ok(DcDecomposition {
        a: Arc::new(ShiftedMap {
            rho,
            lambda: lambda.clone(),
        }),
        b: Arc::new(QuadraticMap {
            n,
            lambda: lambda.clone(),
        }),
        provenance: Provenance::Convexified(lambda),
    })
}

/// First-order Taylor model `ρ(z̄) + F(z − z̄)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearMinorant {
    pub zbar: DVector<f64>,
    pub value: DVector<f64>,
    pub slope: DMatrix<f64>,
}

impl LinearMinorant {
    pub fn eval(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.value + &self.slope * (z - &self.zbar)
    }
}

pub fn linear_minorant(s: &dyn DifferentiableMap, zbar: &DVector<f64>) -> LinearMinorant {
    LinearMinorant {
        zbar: zbar.clone(),
        value: s.eval(zbar),
        slope: s.jacobian(zbar),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnclosureKind {
    Box,
    Parallelotope,
}

/// A box or parallelotope given as a zonotope with `n` generators.
#[derive(Clone, Debug, PartialEq)]
pub struct PolytopeEnclosure {
    pub kind: EnclosureKind,
    pub zonotope: Zonotope,
}

impl PolytopeEnclosure {
    pub fn dim(&self) -> usize {
        self.zonotope.dim()
    }

    pub fn center(&self) -> &DVector<f64> {
        self.zonotope.center()
    }

    pub fn vertex_count(&self) -> usize {
        1usize << self.zonotope.ng()
    }

    pub fn vertices(&self, cap: usize) -> Result<Vec<DVector<f64>>> {
        vertices(&self.zonotope, cap)
    }

    /// Componentwise bounding box.
    pub fn interval_hull(&self) -> IntervalVector {
        self.zonotope.interval_hull()
    }
}

/// The box `bx` as an enclosure polytope.
pub fn box_hull_polytope(bx: &IntervalVector) -> PolytopeEnclosure {
    PolytopeEnclosure {
        kind: EnclosureKind::Box,
        zonotope: box_to_zonotope(bx),
    }
}

/// `G·σ + c` for all `σ ∈ {−1,+1}ⁿᵍ`, lexicographic in `σ` with `−1` first.
pub fn vertices(z: &Zonotope, cap: usize) -> Result<Vec<DVector<f64>>> {
    let k = z.ng();
    if k > cap {
        return Err(Error::VertexBudget { dim: k, cap });
    }
    let g = z.generators();
    Ok((0..1usize << k)
        .map(|idx| {
            let sigma = DVector::from_fn(k, |j, _| if idx >> (k - 1 - j) & 1 == 1 { 1.0 } else { -1.0 });
            g * sigma + z.center()
        })
        .collect())
}

struct VertexTable {
    a: Vec<DVector<f64>>,
    b: Vec<DVector<f64>>,
    a_lin: Vec<DVector<f64>>,
    b_lin: Vec<DVector<f64>>,
    scale: f64,
}

fn vertex_table(dc: &DcDecomposition, p: &PolytopeEnclosure, zbar: &DVector<f64>, cap: usize) -> Result<VertexTable> {
    check_dim("dc vertex evaluation", dc.a.dim_in(), p.dim())?;
    let verts = p.vertices(cap)?;
    let am = linear_minorant(dc.a.as_ref(), zbar);
    let bm = linear_minorant(dc.b.as_ref(), zbar);
    let mut t = VertexTable {
        a: Vec::with_capacity(verts.len()),
        b: Vec::with_capacity(verts.len()),
        a_lin: Vec::with_capacity(verts.len()),
        b_lin: Vec::with_capacity(verts.len()),
        scale: 1.0 + am.value.amax().max(bm.value.amax()),
    };
    for v in &verts {
        let (av, bv) = (dc.a.eval(v), dc.b.eval(v));
        t.scale = t.scale.max(1.0 + av.amax().max(bv.amax()));
        t.a.push(av);
        t.b.push(bv);
        t.a_lin.push(am.eval(v));
        t.b_lin.push(bm.eval(v));
    }
    Ok(t)
}

/// Guaranteed range of `ρᵢ = ρᵃᵢ − ρᵇᵢ` over `p`, linearizing at the center.
pub fn dc_bounds(dc: &DcDecomposition, p: &PolytopeEnclosure, i: usize, cap: usize) -> Result<Interval> {
    if i >= dc.a.dim_out() {
        return Err(Error::Invalid(format!("component {i} out of range")));
    }
    let t = vertex_table(dc, p, p.center(), cap)?;
    let lo = (0..t.a.len())
        .map(|k| t.a_lin[k][i] - t.b[k][i])
        .fold(f64::INFINITY, f64::min);
    let hi = (0..t.a.len())
        .map(|k| t.a[k][i] - t.b_lin[k][i])
        .fold(f64::NEG_INFINITY, f64::max);
    let pad = 1e-12 * t.scale;
    Ok(Interval::new(lo - pad, hi + pad))
}

/// Zonotope `R ∋ ρ(z) − ρ(z̄) − ∇ρ(z̄)(z − z̄)` for all `z ∈ p`.
pub fn linearization_enclosure(
    dc: &DcDecomposition,
    rho: &dyn DifferentiableMap,
    p: &PolytopeEnclosure,
    zbar: &DVector<f64>,
    cap: usize,
) -> Result<Zonotope> {
    let m = rho.dim_out();
    check_dim("linearization_enclosure (outputs)", m, dc.a.dim_out())?;
    if rho.is_affine() {
        return Ok(Zonotope::point(DVector::zeros(m)));
    }
    let t = vertex_table(dc, p, zbar, cap)?;
    let pad = 1e-12 * t.scale;
    let bounds: IntervalVector = (0..m)
        .map(|i| {
            let lo = (0..t.a.len()).map(|k| t.b_lin[k][i] - t.b[k][i]).fold(0.0, f64::min);
            let hi = (0..t.a.len()).map(|k| t.a[k][i] - t.a_lin[k][i]).fold(0.0, f64::max);
            Interval::new(lo - pad, hi + pad)
        })
        .collect();
    Ok(box_to_zonotope(&bounds))
}

/// Shrinks the parallelotope `c ⊇ p` along its own generators:
/// `ζᵢ ∈ [min, max] ξᶜᵢ` subject to `Gᶜξᶜ + cᶜ = Gᶻξᶻ + cᶻ`, `ξᶻ ∈ B(Aᶻ, bᶻ)`.
pub fn tighten_parallelotope(c: &Zonotope, p: &ConstrainedZonotope, solver: &mut SimplexSolver) -> Result<Zonotope> {
    let n = c.dim();
    check_dim("tighten_parallelotope", n, p.dim())?;
    let (nc, nz, nh) = (c.ng(), p.ng(), p.nh());
    let nv = nc + nz;
    let mut a = DMatrix::zeros(nh + n, nv);
    a.view_mut((0, nc), (nh, nz)).copy_from(p.constraints());
    a.view_mut((nh, 0), (n, nc)).copy_from(c.generators());
    a.view_mut((nh, nc), (n, nz)).copy_from(&(-p.generators()));
    let mut b = DVector::zeros(nh + n);
    b.rows_mut(0, nh).copy_from(p.offsets());
    b.rows_mut(nh, n).copy_from(&(p.center() - c.center()));
    let lower = DVector::from_element(nv, -1.0);
    let upper = DVector::from_element(nv, 1.0);

    let mut lo = DVector::zeros(nc);
    let mut hi = DVector::zeros(nc);
    for i in 0..nc {
        for (sense, slot) in [(Sense::Minimize, &mut lo), (Sense::Maximize, &mut hi)] {
            let mut obj = DVector::zeros(nv);
            obj[i] = 1.0;
            let lp = LinearProgram::new(obj, a.clone(), b.clone(), lower.clone(), upper.clone(), sense)?;
            let sol = solver.solve(&lp);
            match sol.status {
                LpStatus::Optimal => slot[i] = sol.objective_value,
                LpStatus::Infeasible if p.is_empty(solver) => return Err(Error::Empty),
                LpStatus::Infeasible => return Err(Error::NotContained),
                s => return Err(Error::Lp(s)),
            }
        }
    }
    let pad = 10.0 * solver.tolerances().feas;
    let mut mid = DVector::zeros(nc);
    let mut rad = DVector::zeros(nc);
    for i in 0..nc {
        let l = (lo[i].min(hi[i]) - pad).max(-1.0);
        let h = (hi[i].max(lo[i]) + pad).min(1.0);
        mid[i] = 0.5 * (l + h);
        rad[i] = 0.5 * (h - l);
    }
    let g = c.generators() * DMatrix::from_diagonal(&rad);
    Zonotope::new(g, c.center() + c.generators() * mid)
}

/// Box or tightened parallelotope containing `z`.
pub fn enclose(z: &ConstrainedZonotope, kind: EnclosureKind, solver: &mut SimplexSolver) -> Result<PolytopeEnclosure> {
    let zonotope = match kind {
        EnclosureKind::Box => box_to_zonotope(&z.interval_hull(solver)?),
        EnclosureKind::Parallelotope => {
            let n = z.dim();
            let candidate = z.reduce(ReductionTargets::new(0, n), solver)?;
            let candidate = if candidate.ng() == n {
                candidate.as_zonotope_relaxed()
            } else {
                // fewer generators than dimensions: pad with zero columns
                let mut g = DMatrix::zeros(n, n);
                g.columns_mut(0, candidate.ng()).copy_from(candidate.generators());
                Zonotope::new(g, candidate.center().clone())?
            };
            tighten_parallelotope(&candidate, z, solver)?
        }
    };
    Ok(PolytopeEnclosure { kind, zonotope })
}
