//! Randomized property checks that can be run from the command line.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::czset::{ConstrainedZonotope, ReductionTargets};
use crate::dcprog::{
    box_hull_polytope, convexify, eig_lower_bound, linearization_enclosure, DcDecomposition, DifferentiableMap, FnMap,
    DEFAULT_VERTEX_CAP,
};
use crate::interval::{Interval, IntervalMatrix, IntervalVector};
use crate::lp::SimplexSolver;
use crate::models::{build_attitude, build_quad2d};

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// A nonempty random constrained zonotope: `b = Aξ₀` for an interior `ξ₀`.
pub fn random_cz<R: Rng + ?Sized>(rng: &mut R, n: usize, ng: usize, nh: usize) -> ConstrainedZonotope {
    let g = DMatrix::from_fn(n, ng, |_, _| rng.random_range(-1.0..1.0));
    let c = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let a = DMatrix::from_fn(nh, ng, |_, _| rng.random_range(-1.0..1.0));
    let xi0 = DVector::from_fn(ng, |_, _| rng.random_range(-0.8..0.8));
    let b = &a * xi0;
    ConstrainedZonotope::new(g, c, a, b).expect("consistent shapes")
}

fn check(name: &'static str, failures: usize, total: usize) -> CheckResult {
    CheckResult {
        name,
        passed: failures == 0,
        detail: format!("{failures} violations in {total} probes"),
    }
}

fn set_operations(rng: &mut ChaCha8Rng, lp: &mut SimplexSolver) -> CheckResult {
    let (mut bad, mut total) = (0, 0);
    for _ in 0..20 {
        let x = random_cz(rng, 2, 4, 1);
        let y = random_cz(rng, 2, 3, 1);
        let l = DMatrix::from_fn(2, 2, |_, _| rng.random_range(-2.0..2.0));
        let m = DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0));
        let sum = x.minkowski_sum(&y).expect("same dimension");
        let img = x.affine_map(&l, &m).expect("square map");
        let prod = x.cartesian_product(&y);
        for _ in 0..10 {
            let (px, py) = match (x.sample_point(rng, lp), y.sample_point(rng, lp)) {
                (Ok(a), Ok(b)) => (a, b),
                _ => {
                    bad += 1;
                    continue;
                }
            };
            total += 3;
            bad += usize::from(!sum.contains_point(&(&px + &py), lp));
            bad += usize::from(!img.contains_point(&(&l * &px + &m), lp));
            let joint = DVector::from_iterator(4, px.iter().chain(py.iter()).copied());
            bad += usize::from(!prod.contains_point(&joint, lp));
        }
    }
    check("set operations contain images of samples", bad, total)
}

fn reduction(rng: &mut ChaCha8Rng, lp: &mut SimplexSolver) -> CheckResult {
    let (mut bad, mut total) = (0, 0);
    for _ in 0..20 {
        let x = random_cz(rng, 3, 10, 4);
        let Ok(r) = x.reduce(ReductionTargets::new(1, 5), lp) else {
            bad += 1;
            continue;
        };
        bad += usize::from(r.nh() > 1 || r.ng() > 5);
        for _ in 0..20 {
            if let Ok(p) = x.sample_point(rng, lp) {
                total += 1;
                bad += usize::from(!r.contains_point(&p, lp));
            }
        }
    }
    check("reduction contains the original set", bad, total)
}

fn scalar(f: fn(f64) -> f64, df: fn(f64) -> f64) -> Arc<dyn DifferentiableMap> {
    Arc::new(FnMap::new(
        1,
        1,
        move |z| DVector::from_element(1, f(z[0])),
        move |z| DMatrix::from_element(1, 1, df(z[0])),
    ))
}

fn enclosures() -> CheckResult {
    let zero = Arc::new(FnMap::affine(DMatrix::zeros(1, 1), DVector::zeros(1)));
    let cases: Vec<(Arc<dyn DifferentiableMap>, DcDecomposition)> = vec![
        {
            let f = scalar(|x| x * x, |x| 2.0 * x);
            (f.clone(), DcDecomposition::explicit(f, zero.clone()).expect("shapes"))
        },
        {
            let f = scalar(|x| -x * x, |x| -2.0 * x);
            let b = scalar(|x| x * x, |x| 2.0 * x);
            (f, DcDecomposition::explicit(zero.clone(), b).expect("shapes"))
        },
        {
            let f = scalar(|x| 0.1 * x.exp(), |x| 0.1 * x.exp());
            (f.clone(), DcDecomposition::explicit(f, zero.clone()).expect("shapes"))
        },
    ];
    let (mut bad, mut total) = (0, 0);
    for (f, dc) in &cases {
        for (lo, hi) in [(-1.0, 1.0), (-0.3, 2.0), (0.5, 0.6)] {
            let bx = IntervalVector::new(vec![Interval::new(lo, hi)]);
            let p = box_hull_polytope(&bx);
            let zbar = p.center().clone();
            let Ok(r) = linearization_enclosure(dc, f.as_ref(), &p, &zbar, DEFAULT_VERTEX_CAP) else {
                bad += 1;
                continue;
            };
            let h = r.interval_hull()[0];
            let (f0, d0) = (f.eval(&zbar)[0], f.jacobian(&zbar)[(0, 0)]);
            for k in 0..=1000 {
                let z = lo + (hi - lo) * k as f64 / 1000.0;
                let e = f.eval(&DVector::from_element(1, z))[0] - f0 - d0 * (z - zbar[0]);
                total += 1;
                bad += usize::from(e < h.lo() - 1e-9 || e > h.hi() + 1e-9);
            }
        }
    }
    check("linearization enclosures contain the error", bad, total)
}

fn eig_bounds(rng: &mut ChaCha8Rng) -> CheckResult {
    let (mut bad, mut total) = (0, 0);
    for _ in 0..100 {
        let n = rng.random_range(1..=4);
        let mid = DMatrix::from_fn(n, n, |_, _| rng.random_range(-2.0..2.0));
        let mid = (&mid + mid.transpose()) * 0.5;
        let rad = DMatrix::from_fn(n, n, |_, _| rng.random_range(0.0..0.5));
        let rad = (&rad + rad.transpose()) * 0.5;
        let h = IntervalMatrix::new(&mid - &rad, &mid + &rad);
        let bound = eig_lower_bound(&h);
        for _ in 0..20 {
            let mut m = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let v = if rng.random_bool(0.5) {
                        h.lower()[(i, j)]
                    } else {
                        h.upper()[(i, j)]
                    };
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
            total += 1;
            bad += usize::from(m.symmetric_eigenvalues().min() < bound - 1e-12);
        }
    }
    check("eigenvalue lower bound is sound", bad, total)
}

/// Second differences of `ρᵃ` along random directions inside `bx`.
fn convex_on_box(a: &dyn DifferentiableMap, bx: &IntervalVector, rng: &mut ChaCha8Rng, probes: usize) -> usize {
    let mut bad = 0;
    for _ in 0..probes {
        let z = DVector::from_fn(bx.len(), |i, _| {
            let iv = bx[i];
            if iv.diam() > 0.0 {
                rng.random_range(iv.lo()..=iv.hi())
            } else {
                iv.lo()
            }
        });
        let d = DVector::from_fn(bx.len(), |i, _| rng.random_range(-1.0..1.0) * bx[i].rad().max(1e-3));
        let h = 1e-2;
        let (fp, f0, fm) = (a.eval(&(&z + &d * h)), a.eval(&z), a.eval(&(&z - &d * h)));
        let scale = 1.0 + f0.amax();
        let second = (fp - &f0 * 2.0 + fm) / (h * h);
        bad += usize::from(second.min() < -1e-6 * scale / (h * h));
    }
    bad
}

fn convexity(rng: &mut ChaCha8Rng) -> CheckResult {
    let (mut bad, mut total) = (0, 0);
    let quad = build_quad2d();
    let qbox = IntervalVector::new(vec![
        Interval::new(-3.0, 3.0),
        Interval::new(-3.0, 3.0),
        Interval::new(-0.1, 0.1),
        Interval::new(-0.1, 0.1),
    ]);
    let qdc = quad.model.f_dc.as_ref().expect("explicit pair");
    for part in [&qdc.a, &qdc.b] {
        bad += convex_on_box(part.as_ref(), &qbox, rng, 100);
        total += 100;
    }
    let att = build_attitude();
    let mut fbox: Vec<Interval> = vec![Interval::new(-1.0, 1.0); 4];
    fbox.extend(std::iter::repeat_n(Interval::new(-0.3, 0.3), 3));
    fbox.extend(std::iter::repeat_n(Interval::new(-3e-3, 3e-3), 3));
    let fbox = IntervalVector::new(fbox);
    match convexify(att.model.f.clone(), &fbox) {
        Ok(dc) => {
            bad += convex_on_box(dc.a.as_ref(), &fbox, rng, 100);
            total += 100;
        }
        Err(_) => bad += 1,
    }
    let mut hbox: Vec<Interval> = vec![Interval::new(-1.0, 1.0); 4];
    hbox.extend(std::iter::repeat_n(Interval::new(-0.15, 0.15), 6));
    let hbox = IntervalVector::new(hbox);
    let hdc = att.model.h_dc.as_ref().expect("explicit pair");
    for part in [&hdc.a, &hdc.b] {
        bad += convex_on_box(part.as_ref(), &hbox, rng, 100);
        total += 100;
    }
    check("DC parts are convex on the operating boxes", bad, total)
}

/// Runs every suite with a fixed seed.
pub fn run_all(seed: u64) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lp = SimplexSolver::default();
    vec![
        set_operations(&mut rng, &mut lp),
        reduction(&mut rng, &mut lp),
        enclosures(),
        eig_bounds(&mut rng),
        convexity(&mut rng),
    ]
}
