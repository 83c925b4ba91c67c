//! Interval arithmetic over scalars, vectors and matrices.
//!
//! Results are not rounded outward. Instead every arithmetic result is widened
//! by a small absolute inflation (see [`set_inflation`]), which is enough to
//! keep the enclosure property tests stable at double precision.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector};

/// Default absolute widening applied to every interval operation.
pub const DEFAULT_INFLATION: f64 = 1e-12;

static INFLATION_BITS: AtomicU64 = AtomicU64::new(0x3D71_9799_812D_EA11); // 1e-12

/// Sets the process-wide absolute widening applied to interval results.
pub fn set_inflation(eps: f64) {
    assert!(eps >= 0.0 && eps.is_finite(), "inflation must be finite and >= 0");
    INFLATION_BITS.store(eps.to_bits(), Ordering::Relaxed);
}

/// Current process-wide interval widening.
pub fn inflation() -> f64 {
    f64::from_bits(INFLATION_BITS.load(Ordering::Relaxed))
}

/// A closed real interval `[lo, hi]`.
#[derive(Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl Interval {
    /// Builds `[lo, hi]`. Panics if `lo > hi` or either bound is NaN.
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "invalid interval [{lo}, {hi}]");
        Self { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Self::new(x, x)
    }

    /// `[-r, r]`
    pub fn symmetric(r: f64) -> Self {
        Self::new(-r.abs(), r.abs())
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn rad(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    /// Diameter `hi - lo`.
    pub fn diam(&self) -> f64 {
        self.hi - self.lo
    }

    /// Largest absolute value in the interval.
    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Smallest interval containing both operands.
    pub fn hull(&self, other: &Interval) -> Interval {
        Interval::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }

    /// Intersection, or `None` when disjoint.
    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then(|| Interval::new(lo, hi))
    }

    /// Widens both ends by `eps`.
    pub fn inflate(&self, eps: f64) -> Interval {
        Interval::new(self.lo - eps, self.hi + eps)
    }

    fn widened(lo: f64, hi: f64) -> Interval {
        let eps = inflation();
        Interval::new(lo - eps, hi + eps)
    }

    pub fn scale(&self, k: f64) -> Interval {
        if k >= 0.0 {
            Interval::widened(k * self.lo, k * self.hi)
        } else {
            Interval::widened(k * self.hi, k * self.lo)
        }
    }

    pub fn sqr(&self) -> Interval {
        let (a, b) = (self.lo * self.lo, self.hi * self.hi);
        if self.lo >= 0.0 {
            Interval::widened(a, b)
        } else if self.hi <= 0.0 {
            Interval::widened(b, a)
        } else {
            Interval::widened(0.0, a.max(b))
        }
    }

    pub fn exp(&self) -> Interval {
        Interval::widened(self.lo.exp(), self.hi.exp())
    }

    pub fn cos(&self) -> Interval {
        if self.diam() >= 2.0 * PI {
            return Interval::widened(-1.0, 1.0);
        }
        let (ca, cb) = (self.lo.cos(), self.hi.cos());
        let mut lo = ca.min(cb);
        let mut hi = ca.max(cb);
        // maxima at 2kπ, minima at (2k+1)π
        if contains_multiple(self, 0.0, 2.0 * PI) {
            hi = 1.0;
        }
        if contains_multiple(self, PI, 2.0 * PI) {
            lo = -1.0;
        }
        Interval::widened(lo, hi)
    }

    pub fn sin(&self) -> Interval {
        (*self - Interval::point(FRAC_PI_2)).cos()
    }
}

/// Whether `iv` contains `offset + k * period` for some integer `k`.
fn contains_multiple(iv: &Interval, offset: f64, period: f64) -> bool {
    let k = ((iv.lo - offset) / period).ceil();
    offset + k * period <= iv.hi
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval::widened(self.lo + rhs.lo, self.hi + rhs.hi)
    }
}

impl Add<f64> for Interval {
    type Output = Interval;
    fn add(self, rhs: f64) -> Interval {
        Interval::widened(self.lo + rhs, self.hi + rhs)
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Interval::widened(self.lo - rhs.hi, self.hi - rhs.lo)
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval::new(-self.hi, -self.lo)
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        let p = [self.lo * rhs.lo, self.lo * rhs.hi, self.hi * rhs.lo, self.hi * rhs.hi];
        let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval::widened(lo, hi)
    }
}

impl Mul<f64> for Interval {
    type Output = Interval;
    fn mul(self, rhs: f64) -> Interval {
        self.scale(rhs)
    }
}

impl Mul<Interval> for f64 {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        rhs.scale(self)
    }
}

impl From<f64> for Interval {
    fn from(x: f64) -> Self {
        Interval::point(x)
    }
}

pub fn iv_add(a: Interval, b: Interval) -> Interval {
    a + b
}

pub fn iv_sub(a: Interval, b: Interval) -> Interval {
    a - b
}

pub fn iv_mul(a: Interval, b: Interval) -> Interval {
    a * b
}

pub fn iv_neg(a: Interval) -> Interval {
    -a
}

pub fn iv_exp(a: Interval) -> Interval {
    a.exp()
}

pub fn iv_sin(a: Interval) -> Interval {
    a.sin()
}

pub fn iv_cos(a: Interval) -> Interval {
    a.cos()
}

pub fn iv_sqr(a: Interval) -> Interval {
    a.sqr()
}

/// A box in `R^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalVector(Vec<Interval>);

impl IntervalVector {
    pub fn new(entries: Vec<Interval>) -> Self {
        Self(entries)
    }

    /// Box from lower and upper corner; panics if any `lo_i > hi_i`.
    pub fn from_bounds(lo: &DVector<f64>, hi: &DVector<f64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        Self(lo.iter().zip(hi.iter()).map(|(&l, &h)| Interval::new(l, h)).collect())
    }

    pub fn from_point(x: &DVector<f64>) -> Self {
        Self(x.iter().map(|&v| Interval::point(v)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[Interval] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = &Interval> {
        self.0.iter()
    }

    pub fn lower(&self) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.0.iter().map(|i| i.lo))
    }

    pub fn upper(&self) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.0.iter().map(|i| i.hi))
    }

    pub fn mid(&self) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.0.iter().map(Interval::mid))
    }

    pub fn rad(&self) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.0.iter().map(Interval::rad))
    }

    /// Product of the side lengths.
    pub fn volume(&self) -> f64 {
        self.0.iter().map(Interval::diam).product()
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        x.len() == self.len() && self.0.iter().zip(x.iter()).all(|(i, &v)| i.contains(v))
    }

    /// Containment with an absolute slack `tol` on every face.
    pub fn contains_with_tol(&self, x: &DVector<f64>, tol: f64) -> bool {
        x.len() == self.len()
            && self
                .0
                .iter()
                .zip(x.iter())
                .all(|(i, &v)| i.lo - tol <= v && v <= i.hi + tol)
    }

    /// Concatenation `self × other`.
    pub fn product(&self, other: &IntervalVector) -> IntervalVector {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        IntervalVector(v)
    }
}

impl std::ops::Index<usize> for IntervalVector {
    type Output = Interval;
    fn index(&self, i: usize) -> &Interval {
        &self.0[i]
    }
}

impl FromIterator<Interval> for IntervalVector {
    fn from_iter<T: IntoIterator<Item = Interval>>(iter: T) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// Radius and midpoint vectors of a box.
pub fn rad_mid(v: &IntervalVector) -> (DVector<f64>, DVector<f64>) {
    (v.rad(), v.mid())
}

/// Elementwise bounds `lower <= M <= upper`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalMatrix {
    lower: DMatrix<f64>,
    upper: DMatrix<f64>,
}

impl IntervalMatrix {
    pub fn new(lower: DMatrix<f64>, upper: DMatrix<f64>) -> Self {
        assert_eq!(lower.shape(), upper.shape(), "interval matrix shape mismatch");
        assert!(
            lower.iter().zip(upper.iter()).all(|(l, u)| l <= u),
            "interval matrix with lower > upper"
        );
        Self { lower, upper }
    }

    pub fn from_point(m: DMatrix<f64>) -> Self {
        Self {
            lower: m.clone(),
            upper: m,
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_point(DMatrix::zeros(rows, cols))
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Interval) -> Self {
        let mut lower = DMatrix::zeros(rows, cols);
        let mut upper = DMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                let v = f(i, j);
                lower[(i, j)] = v.lo;
                upper[(i, j)] = v.hi;
            }
        }
        Self { lower, upper }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.lower.shape()
    }

    pub fn lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DMatrix<f64> {
        &self.upper
    }

    pub fn get(&self, i: usize, j: usize) -> Interval {
        Interval::new(self.lower[(i, j)], self.upper[(i, j)])
    }

    pub fn set(&mut self, i: usize, j: usize, v: Interval) {
        self.lower[(i, j)] = v.lo;
        self.upper[(i, j)] = v.hi;
    }

    pub fn mid(&self) -> DMatrix<f64> {
        (&self.lower + &self.upper) * 0.5
    }

    pub fn rad(&self) -> DMatrix<f64> {
        (&self.upper - &self.lower) * 0.5
    }

    /// Whether both bound matrices equal their transposes.
    pub fn is_symmetric(&self) -> bool {
        self.lower == self.lower.transpose() && self.upper == self.upper.transpose()
    }

    pub fn contains(&self, m: &DMatrix<f64>) -> bool {
        m.shape() == self.shape()
            && m.iter()
                .zip(self.lower.iter().zip(self.upper.iter()))
                .all(|(v, (l, u))| l <= v && v <= u)
    }
}
