//! The estimation loop: forecast, data assimilation, admissibility,
//! consistency and order reduction.

use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};

use crate::czset::{ConstrainedZonotope, ReductionTargets};
use crate::dcprog::{
    convexify, enclose, linearization_enclosure, DcDecomposition, DifferentiableMap, EnclosureKind, Restricted,
    DEFAULT_VERTEX_CAP,
};
use crate::error::{check_dim, Error, Result};
use crate::lp::{LpTolerances, SimplexSolver};

/// Discrete-time system
/// `x_k = f(x_{k-1}, u_{k-1}, w_{k-1})`, `y_k = h(x_k, v_k)`, `g(x_k) = 0`,
/// `x_k ∈ XF`.
#[derive(Clone)]
pub struct SystemModel {
    pub n: usize,
    /// Known input dimension.
    pub p: usize,
    /// Process noise dimension.
    pub q: usize,
    /// Measurement noise dimension.
    pub r: usize,
    /// Output dimension.
    pub m: usize,
    /// Map on `(x, u, w)`.
    pub f: Arc<dyn DifferentiableMap>,
    /// Map on `(x, v)`.
    pub h: Arc<dyn DifferentiableMap>,
    /// Equality invariant on `x`.
    pub g: Option<Arc<dyn DifferentiableMap>>,
    pub f_dc: Option<DcDecomposition>,
    pub h_dc: Option<DcDecomposition>,
    pub g_dc: Option<DcDecomposition>,
    /// `f` is affine in `w` with a constant Jacobian block.
    pub f_noise_affine: bool,
    /// `h` is affine in `v` with a constant Jacobian block.
    pub h_noise_affine: bool,
    pub w: ConstrainedZonotope,
    pub v: ConstrainedZonotope,
    pub x0: ConstrainedZonotope,
    pub xf: Option<ConstrainedZonotope>,
}

impl SystemModel {
    /// Checks that all members agree on the dimensions.
    pub fn validate(&self) -> Result<()> {
        check_dim("model f input", self.n + self.p + self.q, self.f.dim_in())?;
        check_dim("model f output", self.n, self.f.dim_out())?;
        check_dim("model h input", self.n + self.r, self.h.dim_in())?;
        check_dim("model h output", self.m, self.h.dim_out())?;
        if let Some(g) = &self.g {
            check_dim("model g input", self.n, g.dim_in())?;
        }
        for (dc, map, name) in [
            (&self.f_dc, Some(&self.f), "f"),
            (&self.h_dc, Some(&self.h), "h"),
            (&self.g_dc, self.g.as_ref(), "g"),
        ] {
            if let (Some(dc), Some(map)) = (dc, map) {
                if dc.a.dim_in() != map.dim_in() || dc.a.dim_out() != map.dim_out() {
                    return Err(Error::Invalid(format!("DC pair of {name} has the wrong shape")));
                }
            }
        }
        check_dim("model W", self.q, self.w.dim())?;
        check_dim("model V", self.r, self.v.dim())?;
        check_dim("model X0", self.n, self.x0.dim())?;
        if let Some(xf) = &self.xf {
            check_dim("model XF", self.n, xf.dim())?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Forecast,
    Assimilation,
    Admissibility,
    Consistency,
    Reduction,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Forecast => "forecast",
            Stage::Assimilation => "assimilation",
            Stage::Admissibility => "admissibility",
            Stage::Consistency => "consistency",
            Stage::Reduction => "reduction",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterConfig {
    pub forecast_enclosure: EnclosureKind,
    pub assimilation_enclosure: EnclosureKind,
    pub consistency_enclosure: EnclosureKind,
    pub targets: ReductionTargets,
    pub tolerances: LpTolerances,
    pub vertex_cap: usize,
    /// Apply the invariant `g` when the model has one.
    pub use_consistency: bool,
}

impl FilterConfig {
    pub fn new(targets: ReductionTargets) -> Self {
        Self {
            forecast_enclosure: EnclosureKind::Box,
            assimilation_enclosure: EnclosureKind::Box,
            consistency_enclosure: EnclosureKind::Box,
            targets,
            tolerances: LpTolerances::default(),
            vertex_cap: DEFAULT_VERTEX_CAP,
            use_consistency: true,
        }
    }

    /// Same enclosure kind for every stage.
    pub fn with_enclosure(mut self, kind: EnclosureKind) -> Self {
        self.forecast_enclosure = kind;
        self.assimilation_enclosure = kind;
        self.consistency_enclosure = kind;
        self
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.targets.phi_g < n {
            return Err(Error::Invalid(format!(
                "phi_g = {} is below the state dimension {n}",
                self.targets.phi_g
            )));
        }
        Ok(())
    }

    pub fn solver(&self) -> SimplexSolver {
        SimplexSolver::new(self.tolerances)
    }
}

#[derive(Clone, Debug)]
pub struct StepDiagnostics {
    pub k: usize,
    pub ng: usize,
    pub nh: usize,
    pub elapsed: Duration,
    /// First stage whose intersection came out empty, if any.
    pub empty_stage: Option<Stage>,
}

#[derive(Clone, Debug)]
pub struct FilterState {
    pub set: ConstrainedZonotope,
    pub k: usize,
    pub diagnostics: StepDiagnostics,
}

/// Linearization data of one map around `z̄`.
struct Linearized {
    zbar: DVector<f64>,
    value: DVector<f64>,
    jacobian: DMatrix<f64>,
    remainder: ConstrainedZonotope,
}

/// Linearizes `map` on `(state, fixed...)` with the enclosure polytope built
/// over `z_active` (whose coordinates are `active` in the map's input).
#[allow(clippy::too_many_arguments)]
fn linearize(
    map: &Arc<dyn DifferentiableMap>,
    dc: Option<&DcDecomposition>,
    z_active: &ConstrainedZonotope,
    active: &[usize],
    base: DVector<f64>,
    kind: EnclosureKind,
    cfg: &FilterConfig,
    solver: &mut SimplexSolver,
) -> Result<Linearized> {
    let mut zbar = base;
    let remainder = if map.is_affine() {
        for (slot, &k) in active.iter().enumerate() {
            zbar[k] = z_active.center()[slot];
        }
        ConstrainedZonotope::point(DVector::zeros(map.dim_out()))
    } else {
        let poly = enclose(z_active, kind, solver)?;
        for (slot, &k) in active.iter().enumerate() {
            zbar[k] = poly.center()[slot];
        }
        let restricted = Restricted::new(map.clone(), active.to_vec(), zbar.clone())?;
        let dc = match dc {
            Some(dc) => dc.restrict(active, &zbar)?,
            None => convexify(
                Arc::new(Restricted::new(map.clone(), active.to_vec(), zbar.clone())?),
                &poly.interval_hull(),
            )?,
        };
        linearization_enclosure(&dc, &restricted, &poly, poly.center(), cfg.vertex_cap)?.to_cz()
    };
    Ok(Linearized {
        value: map.eval(&zbar),
        jacobian: map.jacobian(&zbar),
        zbar,
        remainder,
    })
}

fn nonempty(set: ConstrainedZonotope, solver: &mut SimplexSolver) -> Result<ConstrainedZonotope> {
    if set.is_empty(solver) {
        Err(Error::Empty)
    } else {
        Ok(set)
    }
}

/// Outer approximation of `{f(x, u, w) : x ∈ X, w ∈ W}`.
pub fn forecast(
    x: &ConstrainedZonotope,
    u: &DVector<f64>,
    model: &SystemModel,
    cfg: &FilterConfig,
    solver: &mut SimplexSolver,
) -> Result<ConstrainedZonotope> {
    let (n, p, q) = (model.n, model.p, model.q);
    check_dim("forecast (state set)", n, x.dim())?;
    check_dim("forecast (input)", p, u.len())?;
    let w_center = model.w.center().clone();
    let mut base = DVector::zeros(n + p + q);
    base.rows_mut(n, p).copy_from(u);
    base.rows_mut(n + p, q).copy_from(&w_center);

    let (z_active, active): (ConstrainedZonotope, Vec<usize>) = if model.f_noise_affine || q == 0 {
        (x.clone(), (0..n).collect())
    } else {
        (x.cartesian_product(&model.w), (0..n).chain(n + p..n + p + q).collect())
    };
    let lin = linearize(
        &model.f,
        model.f_dc.as_ref(),
        &z_active,
        &active,
        base,
        cfg.forecast_enclosure,
        cfg,
        solver,
    )?;
    let fx = lin.jacobian.columns(0, n).into_owned();
    let fw = lin.jacobian.columns(n + p, q).into_owned();
    let xbar = lin.zbar.rows(0, n).into_owned();
    let wbar = lin.zbar.rows(n + p, q).into_owned();
    let offset = &lin.value - &fx * &xbar - &fw * &wbar;
    let out = x
        .affine_map(&fx, &offset)?
        .minkowski_sum(&model.w.linear_map(&fw)?)?
        .minkowski_sum(&lin.remainder)?;
    Ok(out.prune_zero_generators())
}

/// Outer approximation of `{x ∈ X_pred : y = h(x, v), v ∈ V}`.
pub fn data_assimilate(
    xpred: &ConstrainedZonotope,
    y: &DVector<f64>,
    model: &SystemModel,
    cfg: &FilterConfig,
    solver: &mut SimplexSolver,
) -> Result<ConstrainedZonotope> {
    let (n, r) = (model.n, model.r);
    check_dim("data_assimilate (state set)", n, xpred.dim())?;
    check_dim("data_assimilate (measurement)", model.m, y.len())?;
    let mut base = DVector::zeros(n + r);
    base.rows_mut(n, r).copy_from(model.v.center());
    let (z_active, active): (ConstrainedZonotope, Vec<usize>) = if model.h_noise_affine || r == 0 {
        (xpred.clone(), (0..n).collect())
    } else {
        (xpred.cartesian_product(&model.v), (0..n + r).collect())
    };
    let lin = linearize(
        &model.h,
        model.h_dc.as_ref(),
        &z_active,
        &active,
        base,
        cfg.assimilation_enclosure,
        cfg,
        solver,
    )?;
    let hx = lin.jacobian.columns(0, n).into_owned();
    let hv = lin.jacobian.columns(n, r).into_owned();
    let offset = y - &lin.value + &lin.jacobian * &lin.zbar;
    let ymeas = model
        .v
        .affine_map(&(-&hv), &offset)?
        .minkowski_sum(&lin.remainder.linear_map(&(-DMatrix::identity(model.m, model.m)))?)?;
    nonempty(
        xpred.generalized_intersection(&ymeas, &hx)?.prune_zero_generators(),
        solver,
    )
}

/// `X ∩ XF`.
pub fn admissibility(
    x: &ConstrainedZonotope,
    xf: &ConstrainedZonotope,
    solver: &mut SimplexSolver,
) -> Result<ConstrainedZonotope> {
    nonempty(x.intersection(xf)?, solver)
}

/// Outer approximation of `{x ∈ X : g(x) = 0}`. Returns `x` unchanged when
/// the model has no invariant.
pub fn consistency(
    x: &ConstrainedZonotope,
    model: &SystemModel,
    cfg: &FilterConfig,
    solver: &mut SimplexSolver,
) -> Result<ConstrainedZonotope> {
    let Some(g) = &model.g else {
        return Ok(x.clone());
    };
    let n = model.n;
    let active: Vec<usize> = (0..n).collect();
    let lin = linearize(
        g,
        model.g_dc.as_ref(),
        x,
        &active,
        DVector::zeros(n),
        cfg.consistency_enclosure,
        cfg,
        solver,
    )?;
    let offset = -&lin.value + &lin.jacobian * &lin.zbar;
    let mc = g.dim_out();
    let c = lin.remainder.affine_map(&(-DMatrix::identity(mc, mc)), &offset)?;
    nonempty(
        x.generalized_intersection(&c, &lin.jacobian)?.prune_zero_generators(),
        solver,
    )
}

/// Runs a stage that ends in an intersection. An empty result is recorded
/// and the stage input is passed through.
fn guarded(
    input: ConstrainedZonotope,
    stage: Stage,
    empty: &mut Option<Stage>,
    run: impl FnOnce(&ConstrainedZonotope) -> Result<ConstrainedZonotope>,
) -> Result<ConstrainedZonotope> {
    match run(&input) {
        Ok(out) => Ok(out),
        Err(Error::Empty) => {
            empty.get_or_insert(stage);
            Ok(input)
        }
        Err(e) => Err(e),
    }
}

/// Measurement update, admissibility, consistency and reduction of a
/// predicted set.
fn correct(
    xpred: ConstrainedZonotope,
    y: &DVector<f64>,
    model: &SystemModel,
    cfg: &FilterConfig,
    solver: &mut SimplexSolver,
    empty: &mut Option<Stage>,
) -> Result<ConstrainedZonotope> {
    let mut x = guarded(xpred, Stage::Assimilation, empty, |s| {
        data_assimilate(s, y, model, cfg, solver)
    })?;
    if let Some(xf) = &model.xf {
        x = guarded(x, Stage::Admissibility, empty, |s| admissibility(s, xf, solver))?;
    }
    if cfg.use_consistency && model.g.is_some() {
        x = guarded(x, Stage::Consistency, empty, |s| consistency(s, model, cfg, solver))?;
    }
    match x.reduce(cfg.targets, solver) {
        Ok(z) => Ok(z),
        Err(Error::Empty) => {
            empty.get_or_insert(Stage::Reduction);
            Err(Error::Empty)
        }
        Err(e) => Err(e),
    }
}

/// First update at `k = 0`: the prior `X0` plays the role of the forecast.
pub fn initial_update(
    x0: &ConstrainedZonotope,
    y0: &DVector<f64>,
    model: &SystemModel,
    cfg: &FilterConfig,
    solver: &mut SimplexSolver,
) -> Result<FilterState> {
    cfg.validate(model.n)?;
    let start = Instant::now();
    let mut empty = None;
    let set = correct(x0.clone(), y0, model, cfg, solver, &mut empty)?;
    Ok(FilterState {
        diagnostics: StepDiagnostics {
            k: 0,
            ng: set.ng(),
            nh: set.nh(),
            elapsed: start.elapsed(),
            empty_stage: empty,
        },
        set,
        k: 0,
    })
}

/// One full iteration from `X_{k-1}` with input `u_{k-1}` and output `y_k`.
pub fn czdc_step(
    state: &FilterState,
    u: &DVector<f64>,
    y: &DVector<f64>,
    model: &SystemModel,
    cfg: &FilterConfig,
    solver: &mut SimplexSolver,
) -> Result<FilterState> {
    let start = Instant::now();
    let mut empty = None;
    let xpred = forecast(&state.set, u, model, cfg, solver)?;
    let set = correct(xpred, y, model, cfg, solver, &mut empty)?;
    let k = state.k + 1;
    Ok(FilterState {
        diagnostics: StepDiagnostics {
            k,
            ng: set.ng(),
            nh: set.nh(),
            elapsed: start.elapsed(),
            empty_stage: empty,
        },
        set,
        k,
    })
}
