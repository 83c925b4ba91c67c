//! Benchmark systems: a two-state polynomial/exponential system and
//! quaternion attitude estimation from gyroscope and vector measurements.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::czset::{ConstrainedZonotope, ReductionTargets};
use crate::dcprog::{DcDecomposition, DifferentiableMap, EnclosureKind, FnMap};
use crate::error::{Error, Result};
use crate::filter::{FilterConfig, SystemModel};
use crate::interval::{Interval, IntervalMatrix, IntervalVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BenchmarkId {
    Quad2d,
    Attitude,
}

impl BenchmarkId {
    pub const ALL: [BenchmarkId; 2] = [BenchmarkId::Quad2d, BenchmarkId::Attitude];

    pub fn name(self) -> &'static str {
        match self {
            BenchmarkId::Quad2d => "quad2d",
            BenchmarkId::Attitude => "attitude",
        }
    }

    pub fn build(self) -> Benchmark {
        match self {
            BenchmarkId::Quad2d => build_quad2d(),
            BenchmarkId::Attitude => build_attitude(),
        }
    }
}

impl fmt::Display for BenchmarkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchmarkId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quad2d" => Ok(BenchmarkId::Quad2d),
            "attitude" => Ok(BenchmarkId::Attitude),
            other => Err(Error::Invalid(format!("unknown benchmark `{other}`"))),
        }
    }
}

/// A model together with its simulation setup and default filter settings.
#[derive(Clone)]
pub struct Benchmark {
    pub id: BenchmarkId,
    pub model: SystemModel,
    /// Nominal initial state of the simulated system.
    pub x0: DVector<f64>,
    /// Uncorrupted exogenous input at step `k`.
    pub true_input: fn(usize) -> DVector<f64>,
    /// The filter sees `u = ǔ + w` and the dynamics depend on `u - w` only.
    pub input_carries_noise: bool,
    pub config: FilterConfig,
    pub steps: usize,
    pub runs: usize,
}

/// Componentwise `½ zᵀQᵢz + Lᵢz + dᵢ`.
#[derive(Clone, Debug)]
pub struct QuadraticMap {
    q: Vec<DMatrix<f64>>,
    l: DMatrix<f64>,
    d: DVector<f64>,
}

impl QuadraticMap {
    pub fn new(q: Vec<DMatrix<f64>>, l: DMatrix<f64>, d: DVector<f64>) -> Result<Self> {
        let (m, n) = l.shape();
        if q.len() != m || d.len() != m || q.iter().any(|qi| qi.shape() != (n, n)) {
            return Err(Error::Invalid("inconsistent quadratic map shapes".into()));
        }
        let q = q.into_iter().map(|qi| (&qi + qi.transpose()) * 0.5).collect();
        Ok(Self { q, l, d })
    }

    pub fn zero(n: usize, m: usize) -> Self {
        Self {
            q: vec![DMatrix::zeros(n, n); m],
            l: DMatrix::zeros(m, n),
            d: DVector::zeros(m),
        }
    }
}

impl DifferentiableMap for QuadraticMap {
    fn dim_in(&self) -> usize {
        self.l.ncols()
    }

    fn dim_out(&self) -> usize {
        self.l.nrows()
    }

    fn eval(&self, z: &DVector<f64>) -> DVector<f64> {
        let mut out = &self.l * z + &self.d;
        for (i, qi) in self.q.iter().enumerate() {
            out[i] += 0.5 * z.dot(&(qi * z));
        }
        out
    }

    fn jacobian(&self, z: &DVector<f64>) -> DMatrix<f64> {
        let mut j = self.l.clone();
        for (i, qi) in self.q.iter().enumerate() {
            let row = (qi * z).transpose();
            let mut r = j.row_mut(i);
            r += row;
        }
        j
    }

    fn interval_hessian(&self, i: usize, _bx: &IntervalVector) -> Result<IntervalMatrix> {
        self.q
            .get(i)
            .map(|qi| IntervalMatrix::from_point(qi.clone()))
            .ok_or(Error::HessianUnavailable(i))
    }

    fn is_affine(&self) -> bool {
        self.q.iter().all(|qi| qi.iter().all(|&v| v == 0.0))
    }
}

fn box_set(c: &[f64], r: &[f64]) -> ConstrainedZonotope {
    ConstrainedZonotope::zonotope(
        DMatrix::from_diagonal(&DVector::from_column_slice(r)),
        DVector::from_column_slice(c),
    )
    .expect("box dimensions agree")
}

/// Quadratic form matrix of `Σ ½·(Σⱼ sⱼ xⱼ)²` for signed index lists.
fn sum_of_squares(n: usize, terms: &[&[(usize, f64)]], weight: f64) -> DMatrix<f64> {
    let mut q = DMatrix::zeros(n, n);
    for term in terms {
        for &(i, si) in term.iter() {
            for &(j, sj) in term.iter() {
                // ½ zᵀQz = weight·(Σ s x)²  ⇒  Q = 2·weight·s sᵀ
                q[(i, j)] += 2.0 * weight * si * sj;
            }
        }
    }
    q
}

// ---------------------------------------------------------------------------
// quad2d

fn quad2d_f(z: &DVector<f64>) -> DVector<f64> {
    let (x1, x2, w1, w2) = (z[0], z[1], z[2], z[3]);
    DVector::from_vec(vec![
        -0.7 * x2 + 0.1 * x2 * x2 + 0.1 * x1 * x2 + 0.1 * x1.exp() + w1,
        x1 + x2 - 0.1 * x1 * x1 + 0.2 * x1 * x2 + w2,
    ])
}

fn quad2d_jac(z: &DVector<f64>) -> DMatrix<f64> {
    let (x1, x2) = (z[0], z[1]);
    DMatrix::from_row_slice(
        2,
        4,
        &[
            0.1 * x2 + 0.1 * x1.exp(),
            -0.7 + 0.2 * x2 + 0.1 * x1,
            1.0,
            0.0,
            1.0 - 0.2 * x1 + 0.2 * x2,
            1.0 + 0.2 * x1,
            0.0,
            1.0,
        ],
    )
}

fn quad2d_hessian(i: usize, bx: &IntervalVector) -> IntervalMatrix {
    let mut h = IntervalMatrix::zeros(4, 4);
    let c = |v: f64| Interval::point(v);
    if i == 0 {
        h.set(0, 0, bx[0].exp() * 0.1);
        h.set(0, 1, c(0.1));
        h.set(1, 0, c(0.1));
        h.set(1, 1, c(0.2));
    } else {
        h.set(0, 0, c(-0.2));
        h.set(0, 1, c(0.2));
        h.set(1, 0, c(0.2));
    }
    h
}

fn quad2d_fa() -> FnMap {
    FnMap::new(
        4,
        2,
        |z| {
            let (x1, x2) = (z[0], z[1]);
            DVector::from_vec(vec![
                0.1 * x1 * x1 + 0.1 * x1 * x2 + 0.1 * x2 * x2 + 0.1 * x1.exp() + z[2],
                0.1 * x2 * x2 + x1 + x2 + z[3],
            ])
        },
        |z| {
            let (x1, x2) = (z[0], z[1]);
            DMatrix::from_row_slice(
                2,
                4,
                &[
                    0.2 * x1 + 0.1 * x2 + 0.1 * x1.exp(),
                    0.1 * x1 + 0.2 * x2,
                    1.0,
                    0.0,
                    1.0,
                    0.2 * x2 + 1.0,
                    0.0,
                    1.0,
                ],
            )
        },
    )
    .with_hessian(|i, bx| {
        let mut h = IntervalMatrix::zeros(4, 4);
        if i == 0 {
            h.set(0, 0, bx[0].exp() * 0.1 + 0.2);
            h.set(0, 1, Interval::point(0.1));
            h.set(1, 0, Interval::point(0.1));
            h.set(1, 1, Interval::point(0.2));
        } else {
            h.set(1, 1, Interval::point(0.2));
        }
        h
    })
}

fn quad2d_fb() -> QuadraticMap {
    // [0.1x1² + 0.7x2; 0.1x1² + 0.1x2² − 0.2x1x2]
    let q1 = DMatrix::from_row_slice(
        4,
        4,
        &[
            0.2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
        ],
    );
    let q2 = DMatrix::from_row_slice(
        4,
        4,
        &[
            0.2, -0.2, 0.0, 0.0, -0.2, 0.2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
        ],
    );
    let l = DMatrix::from_row_slice(2, 4, &[0.0, 0.7, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    QuadraticMap::new(vec![q1, q2], l, DVector::zeros(2)).expect("static shapes")
}

pub fn build_quad2d() -> Benchmark {
    let f = Arc::new(FnMap::new(4, 2, quad2d_f, quad2d_jac).with_hessian(quad2d_hessian));
    let h = Arc::new(FnMap::affine(
        DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]),
        DVector::zeros(1),
    ));
    let f_dc = DcDecomposition::explicit(Arc::new(quad2d_fa()), Arc::new(quad2d_fb())).expect("matching shapes");
    let model = SystemModel {
        n: 2,
        p: 0,
        q: 2,
        r: 1,
        m: 1,
        f,
        h,
        g: None,
        f_dc: Some(f_dc),
        h_dc: None,
        g_dc: None,
        f_noise_affine: true,
        h_noise_affine: true,
        w: box_set(&[0.0, 0.0], &[0.1, 0.1]),
        v: box_set(&[0.0], &[0.2]),
        x0: box_set(&[0.0, 0.0], &[3.0, 3.0]),
        xf: None,
    };
    Benchmark {
        id: BenchmarkId::Quad2d,
        model,
        x0: DVector::from_vec(vec![1.0, 1.0]),
        true_input: |_| DVector::zeros(0),
        input_carries_noise: false,
        config: FilterConfig::new(ReductionTargets::new(3, 8)).with_enclosure(EnclosureKind::Box),
        steps: 40,
        runs: 100,
    }
}

// ---------------------------------------------------------------------------
// attitude

const TS: f64 = 0.2;
/// Half the sampling time; the rotation angle is `THETA·‖a‖`.
const THETA: f64 = TS / 2.0;

/// Physical angular rate at step `k`.
pub fn true_input(k: usize) -> DVector<f64> {
    let s = 2.0 * std::f64::consts::PI / 12.0 * k as f64 * TS;
    DVector::from_vec(vec![0.3 * s.sin(), 0.3 * (s - 6.0).sin(), 0.3 * (s - 12.0).sin()])
}

/// Coefficient matrices `Ωⱼ` with `Ω(a) = Σⱼ aⱼΩⱼ`, stored as
/// `(row, col, sign)` triplets; each row of each `Ωⱼ` has one entry.
const OMEGA: [[(usize, usize, f64); 4]; 3] = [
    [(0, 3, 1.0), (1, 2, 1.0), (2, 1, -1.0), (3, 0, -1.0)],
    [(0, 2, -1.0), (1, 3, 1.0), (2, 0, 1.0), (3, 1, -1.0)],
    [(0, 1, 1.0), (1, 0, -1.0), (2, 3, 1.0), (3, 2, -1.0)],
];

/// `Ω(a)` as used in the attitude kinematics.
pub fn omega(a: &DVector<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(4, 4);
    for (j, entries) in OMEGA.iter().enumerate() {
        for &(r, c, s) in entries {
            m[(r, c)] += s * a[j];
        }
    }
    m
}

/// Returns `(row_of_entry, col, sign)` for row `i` of `Ωⱼ`.
fn omega_entry(j: usize, i: usize) -> (usize, f64) {
    let e = OMEGA[j].iter().find(|e| e.0 == i).expect("each row has one entry");
    (e.1, e.2)
}

/// Power series of `cos(θ√t)` (`odd = false`) or `sin(θ√t)/√t`
/// (`odd = true`) and their `t`-derivatives.
struct TrigSeries {
    odd: bool,
    deriv: usize,
}

impl TrigSeries {
    /// Coefficient of `t^(k - deriv)`, sign included, for `k >= deriv`.
    fn terms(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        let e = usize::from(self.odd);
        let mut base = if self.odd { THETA } else { 1.0 };
        (0..200usize).map(move |k| {
            if k > 0 {
                let a = (2 * k - 1 + e) as f64;
                let b = (2 * k + e) as f64;
                base *= THETA * THETA / (a * b);
            }
            let falling: f64 = (0..self.deriv).map(|i| (k as f64) - i as f64).product();
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            (k, sign * base * falling)
        })
    }

    fn point(&self, t: f64) -> f64 {
        let mut sum = 0.0;
        for (k, coef) in self.terms().skip(self.deriv) {
            let term = coef * t.powi((k - self.deriv) as i32);
            sum += term;
            if k > self.deriv + 2 && term.abs() <= 1e-20 * (1.0 + sum.abs()) {
                break;
            }
        }
        sum
    }

    /// Enclosure over `t ∈ tt`, `tt ⊆ [0, ∞)`, with a truncation bound.
    fn interval(&self, tt: Interval) -> Result<Interval> {
        let (tl, th) = (tt.lo().max(0.0), tt.hi().max(0.0));
        let (mut lo, mut hi) = (0.0f64, 0.0f64);
        let e = usize::from(self.odd);
        for (k, coef) in self.terms().skip(self.deriv) {
            let pw = (k - self.deriv) as i32;
            let (p, q) = (coef * tl.powi(pw), coef * th.powi(pw));
            let mag = p.abs().max(q.abs());
            let ratio = 4.0 * THETA * THETA * th / (((2 * k + 1 + e) * (2 * k + 2 + e)) as f64);
            if k > self.deriv + 2 && ratio <= 0.5 && mag <= 1e-20 * (1.0 + lo.abs().max(hi.abs())) {
                // alternating tail with ratio <= 1/2 is bounded by twice its first term
                let pad = 2.0 * mag + 1e-15 * (1.0 + lo.abs().max(hi.abs()));
                return Ok(Interval::new(lo - pad, hi + pad));
            }
            lo += p.min(q);
            hi += p.max(q);
        }
        Err(Error::HessianUnavailable(0))
    }
}

const COS: TrigSeries = TrigSeries { odd: false, deriv: 0 };
const COS1: TrigSeries = TrigSeries { odd: false, deriv: 1 };
const COS2: TrigSeries = TrigSeries { odd: false, deriv: 2 };
const SINC: TrigSeries = TrigSeries { odd: true, deriv: 0 };
const SINC1: TrigSeries = TrigSeries { odd: true, deriv: 1 };
const SINC2: TrigSeries = TrigSeries { odd: true, deriv: 2 };

/// `f(x, u, w) = (cos(θ‖a‖)I − sin(θ‖a‖)/‖a‖·Ω(a))x` with `a = u − w`.
struct AttitudeDynamics;

impl AttitudeDynamics {
    fn split(z: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let x = z.rows(0, 4).into_owned();
        let a = z.rows(4, 3) - z.rows(7, 3);
        (x, a)
    }

    fn coefficients(a: &DVector<f64>) -> (f64, f64) {
        let t = a.norm_squared();
        let p = THETA * t.sqrt();
        if p < 1e-6 {
            (COS.point(t), SINC.point(t))
        } else {
            (p.cos(), p.sin() / t.sqrt())
        }
    }
}

impl DifferentiableMap for AttitudeDynamics {
    fn dim_in(&self) -> usize {
        10
    }

    fn dim_out(&self) -> usize {
        4
    }

    fn eval(&self, z: &DVector<f64>) -> DVector<f64> {
        let (x, a) = Self::split(z);
        let (c, s) = Self::coefficients(&a);
        &x * c - omega(&a) * &x * s
    }

    fn jacobian(&self, z: &DVector<f64>) -> DMatrix<f64> {
        let (x, a) = Self::split(z);
        let t = a.norm_squared();
        let (c, s) = Self::coefficients(&a);
        let (c1, s1) = (COS1.point(t), SINC1.point(t));
        let om = omega(&a);
        let omx = &om * &x;
        let mut j = DMatrix::zeros(4, 10);
        j.view_mut((0, 0), (4, 4))
            .copy_from(&(DMatrix::identity(4, 4) * c - &om * s));
        for l in 0..3 {
            let oml_x = {
                let mut v = DVector::zeros(4);
                for &(r, col, sg) in &OMEGA[l] {
                    v[r] += sg * x[col];
                }
                v
            };
            let col = &x * (2.0 * a[l] * c1) - oml_x * s - &omx * (2.0 * a[l] * s1);
            j.set_column(4 + l, &col);
            j.set_column(7 + l, &(-col));
        }
        j
    }

    fn interval_hessian(&self, i: usize, bx: &IntervalVector) -> Result<IntervalMatrix> {
        if i >= 4 || bx.len() != 10 {
            return Err(Error::HessianUnavailable(i));
        }
        let x: Vec<Interval> = (0..4).map(|k| bx[k]).collect();
        let a: Vec<Interval> = (0..3).map(|l| bx[4 + l] - bx[7 + l]).collect();
        let t = a.iter().fold(Interval::point(0.0), |acc, al| acc + al.sqr());
        let t = Interval::new(t.lo().max(0.0), t.hi().max(0.0));
        let fail = |_| Error::HessianUnavailable(i);
        let (c1, c2) = (COS1.interval(t).map_err(fail)?, COS2.interval(t).map_err(fail)?);
        let (s0, s1, s2) = (
            SINC.interval(t).map_err(fail)?,
            SINC1.interval(t).map_err(fail)?,
            SINC2.interval(t).map_err(fail)?,
        );
        // (Ωⱼx)ᵢ and (Ω(a)x)ᵢ
        let omj_x: Vec<Interval> = (0..3)
            .map(|j| {
                let (col, sg) = omega_entry(j, i);
                x[col] * sg
            })
            .collect();
        let oma_x = (0..3).fold(Interval::point(0.0), |acc, j| acc + a[j] * omj_x[j]);

        // mixed block ∂²fᵢ/∂x_k∂a_l
        let mut hxa = [[Interval::point(0.0); 3]; 4];
        for (l, al) in a.iter().enumerate() {
            for (k, row) in hxa.iter_mut().enumerate() {
                let mut v = Interval::point(0.0);
                if k == i {
                    v = v + *al * c1 * 2.0;
                }
                let (col, sg) = omega_entry(l, i);
                if col == k {
                    v = v - s0 * sg;
                }
                // Ω(a)_{ik}
                let om_ik = (0..3).fold(Interval::point(0.0), |acc, j| {
                    let (cj, sj) = omega_entry(j, i);
                    if cj == k {
                        acc + a[j] * sj
                    } else {
                        acc
                    }
                });
                v = v - *al * s1 * om_ik * 2.0;
                row[l] = v;
            }
        }
        // ∂²fᵢ/∂a_l∂a_m
        let mut haa = [[Interval::point(0.0); 3]; 3];
        for l in 0..3 {
            for m in 0..3 {
                let delta = if l == m { 1.0 } else { 0.0 };
                let d2c = a[l] * a[m] * c2 * 4.0 + c1 * (2.0 * delta);
                let mut d2t = a[m] * s1 * omj_x[l] * 2.0 + a[l] * s1 * omj_x[m] * 2.0 + a[l] * a[m] * s2 * oma_x * 4.0;
                if l == m {
                    d2t = d2t + s1 * oma_x * 2.0;
                }
                haa[l][m] = x[i] * d2c - d2t;
            }
        }
        // symmetrize the enclosure so lower/upper are exact transposes
        for l in 0..3 {
            for m in l + 1..3 {
                let v = haa[l][m].hull(&haa[m][l]);
                haa[l][m] = v;
                haa[m][l] = v;
            }
        }
        let mut h = IntervalMatrix::zeros(10, 10);
        for k in 0..4 {
            for l in 0..3 {
                let v = hxa[k][l];
                for (col, sign) in [(4 + l, 1.0), (7 + l, -1.0)] {
                    h.set(k, col, v * sign);
                    h.set(col, k, v * sign);
                }
            }
        }
        for l in 0..3 {
            for m in 0..3 {
                let v = haa[l][m];
                h.set(4 + l, 4 + m, v);
                h.set(7 + l, 7 + m, v);
                h.set(4 + l, 7 + m, -v);
                h.set(7 + l, 4 + m, -v);
            }
        }
        Ok(h)
    }
}

/// Signed index lists for the measurement split: component `i` is
/// `Σ ½(…)²` over `plus[i]` minus the same over `minus[i]`, except the two
/// diagonal components whose terms are plain squares.
type Terms = &'static [&'static [(usize, f64)]];

const H_PLUS: [Terms; 6] = [
    &[&[(0, 1.0)], &[(3, 1.0)]],
    &[&[(0, 1.0), (1, 1.0)], &[(2, 1.0), (3, -1.0)]],
    &[&[(0, 1.0), (2, 1.0)], &[(1, 1.0), (3, 1.0)]],
    &[&[(0, 1.0), (1, 1.0)], &[(2, 1.0), (3, 1.0)]],
    &[&[(1, 1.0)], &[(3, 1.0)]],
    &[&[(1, 1.0), (2, 1.0)], &[(0, 1.0), (3, -1.0)]],
];

const H_MINUS: [Terms; 6] = [
    &[&[(1, 1.0)], &[(2, 1.0)]],
    &[&[(0, 1.0), (1, -1.0)], &[(2, 1.0), (3, 1.0)]],
    &[&[(0, 1.0), (2, -1.0)], &[(1, 1.0), (3, -1.0)]],
    &[&[(0, 1.0), (1, -1.0)], &[(2, 1.0), (3, -1.0)]],
    &[&[(0, 1.0)], &[(2, 1.0)]],
    &[&[(1, 1.0), (2, -1.0)], &[(0, 1.0), (3, 1.0)]],
];

/// Weight of each squared term: plain squares for components 1 and 5, half
/// squares (polarization of `2xy`) for the bilinear ones.
const H_WEIGHT: [f64; 6] = [1.0, 0.5, 0.5, 0.5, 1.0, 0.5];

/// Embeds a 4×4 form on `x` into the `(x, v)` space.
fn embed_x(q: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(10, 10);
    out.view_mut((0, 0), (4, 4)).copy_from(q);
    out
}

fn attitude_h_parts() -> (QuadraticMap, QuadraticMap) {
    let mut qa = Vec::new();
    let mut qb = Vec::new();
    for i in 0..6 {
        qa.push(embed_x(&sum_of_squares(4, H_PLUS[i], H_WEIGHT[i])));
        qb.push(embed_x(&sum_of_squares(4, H_MINUS[i], H_WEIGHT[i])));
    }
    let mut l = DMatrix::zeros(6, 10);
    l.view_mut((0, 4), (6, 6)).copy_from(&DMatrix::identity(6, 6));
    let a = QuadraticMap::new(qa, l, DVector::zeros(6)).expect("static shapes");
    let b = QuadraticMap::new(qb, DMatrix::zeros(6, 10), DVector::zeros(6)).expect("static shapes");
    (a, b)
}

/// The stacked first two columns of the rotation matrix of `x`, plus `v`.
fn attitude_h() -> QuadraticMap {
    let (a, b) = attitude_h_parts();
    let q = a.q.iter().zip(&b.q).map(|(qa, qb)| qa - qb).collect();
    QuadraticMap::new(q, a.l.clone(), DVector::zeros(6)).expect("static shapes")
}

/// Rows `C(x)r1` and `C(x)r2` evaluated directly.
pub fn rotation_columns(x: &DVector<f64>) -> DVector<f64> {
    let (x1, x2, x3, x4) = (x[0], x[1], x[2], x[3]);
    DVector::from_vec(vec![
        x1 * x1 - x2 * x2 - x3 * x3 + x4 * x4,
        2.0 * (x1 * x2 - x3 * x4),
        2.0 * (x1 * x3 + x2 * x4),
        2.0 * (x1 * x2 + x3 * x4),
        -x1 * x1 + x2 * x2 - x3 * x3 + x4 * x4,
        2.0 * (x2 * x3 - x1 * x4),
    ])
}

fn attitude_g() -> QuadraticMap {
    let q = DMatrix::identity(4, 4) * 2.0;
    QuadraticMap::new(vec![q], DMatrix::zeros(1, 4), DVector::from_element(1, -1.0)).expect("static shapes")
}

pub fn build_attitude() -> Benchmark {
    let (ha, hb) = attitude_h_parts();
    let g: Arc<dyn DifferentiableMap> = Arc::new(attitude_g());
    let model = SystemModel {
        n: 4,
        p: 3,
        q: 3,
        r: 6,
        m: 6,
        f: Arc::new(AttitudeDynamics),
        h: Arc::new(attitude_h()),
        g: Some(g.clone()),
        f_dc: None,
        h_dc: Some(DcDecomposition::explicit(Arc::new(ha), Arc::new(hb)).expect("matching shapes")),
        g_dc: Some(DcDecomposition::explicit(g, Arc::new(QuadraticMap::zero(4, 1))).expect("matching shapes")),
        f_noise_affine: false,
        h_noise_affine: true,
        w: box_set(&[0.0; 3], &[3e-3; 3]),
        v: box_set(&[0.0; 6], &[0.15; 6]),
        x0: box_set(&[0.1, 0.9, 0.1, 0.1], &[0.18; 4]),
        xf: Some(box_set(&[0.0; 4], &[1.0; 4])),
    };
    let mut config = FilterConfig::new(ReductionTargets::new(10, 30));
    config.forecast_enclosure = EnclosureKind::Box;
    config.assimilation_enclosure = EnclosureKind::Parallelotope;
    config.consistency_enclosure = EnclosureKind::Parallelotope;
    Benchmark {
        id: BenchmarkId::Attitude,
        model,
        x0: DVector::from_vec(vec![0.0, 1.0, 0.0, 0.0]),
        true_input,
        input_carries_noise: true,
        config,
        steps: 200,
        runs: 5,
    }
}
