use std::sync::Arc;

use czdc::dcprog::{DcDecomposition, DifferentiableMap, EnclosureKind, FnMap, PolytopeEnclosure};
use czdc::models::{build_attitude, build_quad2d, QuadraticMap};
use czdc::{Interval, IntervalVector, Zonotope};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub struct Case {
    pub name: &'static str,
    pub f: Arc<dyn DifferentiableMap>,
    pub dc: DcDecomposition,
    pub region: IntervalVector,
}

pub fn zero(n: usize, m: usize) -> Arc<dyn DifferentiableMap> {
    Arc::new(FnMap::affine(DMatrix::zeros(m, n), DVector::zeros(m)))
}

pub fn square(n: usize, coef: f64) -> Arc<dyn DifferentiableMap> {
    let q = DMatrix::identity(n, n) * (2.0 * coef);
    Arc::new(QuadraticMap::new(vec![q], DMatrix::zeros(1, n), DVector::zeros(1)).unwrap())
}

pub fn boxed(bounds: &[(f64, f64)]) -> IntervalVector {
    IntervalVector::new(bounds.iter().map(|&(l, h)| Interval::new(l, h)).collect())
}

/// Test function library with their DC splits.
pub fn library() -> Vec<Case> {
    let mut out = Vec::new();
    out.push(Case {
        name: "z^2",
        f: square(1, 1.0),
        dc: DcDecomposition::explicit(square(1, 1.0), zero(1, 1)).unwrap(),
        region: boxed(&[(-1.0, 2.0)]),
    });
    out.push(Case {
        name: "-z^2",
        f: Arc::new(
            QuadraticMap::new(
                vec![DMatrix::from_element(1, 1, -2.0)],
                DMatrix::zeros(1, 1),
                DVector::zeros(1),
            )
            .unwrap(),
        ),
        dc: DcDecomposition::explicit(zero(1, 1), square(1, 1.0)).unwrap(),
        region: boxed(&[(-1.5, 0.5)]),
    });
    // z₁z₂ = ¼(z₁+z₂)² − ¼(z₁−z₂)²
    let prod = QuadraticMap::new(
        vec![DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])],
        DMatrix::zeros(1, 2),
        DVector::zeros(1),
    )
    .unwrap();
    let plus = QuadraticMap::new(
        vec![DMatrix::from_element(2, 2, 0.5)],
        DMatrix::zeros(1, 2),
        DVector::zeros(1),
    )
    .unwrap();
    let minus = QuadraticMap::new(
        vec![DMatrix::from_row_slice(2, 2, &[0.5, -0.5, -0.5, 0.5])],
        DMatrix::zeros(1, 2),
        DVector::zeros(1),
    )
    .unwrap();
    out.push(Case {
        name: "z1*z2",
        f: Arc::new(prod),
        dc: DcDecomposition::explicit(Arc::new(plus), Arc::new(minus)).unwrap(),
        region: boxed(&[(-1.0, 1.0), (0.5, 2.0)]),
    });
    let exp: Arc<dyn DifferentiableMap> = Arc::new(FnMap::new(
        1,
        1,
        |z| DVector::from_element(1, 0.1 * z[0].exp()),
        |z| DMatrix::from_element(1, 1, 0.1 * z[0].exp()),
    ));
    out.push(Case {
        name: "0.1exp",
        f: exp.clone(),
        dc: DcDecomposition::explicit(exp, zero(1, 1)).unwrap(),
        region: boxed(&[(-2.0, 1.5)]),
    });
    let quad = build_quad2d();
    out.push(Case {
        name: "quad2d f",
        f: quad.model.f.clone(),
        dc: quad.model.f_dc.clone().unwrap(),
        region: boxed(&[(-1.0, 2.0), (-0.5, 1.5), (-0.1, 0.1), (-0.1, 0.1)]),
    });
    let att = build_attitude();
    let q = [0.9, 0.3, -0.2, 0.24];
    let mut hb: Vec<(f64, f64)> = q.iter().map(|&v| (v - 0.05, v + 0.05)).collect();
    hb.extend(std::iter::repeat_n((-0.02, 0.02), 6));
    out.push(Case {
        name: "attitude h",
        f: att.model.h.clone(),
        dc: att.model.h_dc.clone().unwrap(),
        region: boxed(&hb),
    });
    let gb: Vec<(f64, f64)> = q.iter().map(|&v| (v - 0.1, v + 0.1)).collect();
    out.push(Case {
        name: "attitude g",
        f: att.model.g.clone().unwrap(),
        dc: att.model.g_dc.clone().unwrap(),
        region: boxed(&gb),
    });
    out
}

/// A parallelotope inside `region`, sheared so that it is not a box.
pub fn sheared(region: &IntervalVector, rng: &mut ChaCha8Rng) -> PolytopeEnclosure {
    let n = region.len();
    let rad = region.rad();
    let mut g = DMatrix::from_diagonal(&(&rad * 0.6));
    for j in 0..n {
        for i in 0..n {
            if i != j {
                g[(i, j)] = rng.random_range(-0.2..0.2) * rad[i] / n as f64;
            }
        }
    }
    PolytopeEnclosure {
        kind: EnclosureKind::Parallelotope,
        zonotope: Zonotope::new(g, region.mid()).unwrap(),
    }
}

/// Grid for n ≤ 2, uniform samples otherwise, in generator coordinates.
pub fn probes(p: &PolytopeEnclosure, rng: &mut ChaCha8Rng) -> Vec<DVector<f64>> {
    let z = &p.zonotope;
    let n = z.ng();
    let coords: Vec<DVector<f64>> = match n {
        1 => (0..=2000)
            .map(|k| DVector::from_element(1, -1.0 + k as f64 / 1000.0))
            .collect(),
        2 => (0..=200)
            .flat_map(|a| {
                (0..=200).map(move |b| DVector::from_vec(vec![-1.0 + a as f64 / 100.0, -1.0 + b as f64 / 100.0]))
            })
            .collect(),
        _ => (0..10_000)
            .map(|_| DVector::from_fn(n, |_, _| rng.random_range(-1.0..=1.0)))
            .collect(),
    };
    coords.into_iter().map(|s| z.generators() * s + z.center()).collect()
}

/// Central second differences along random directions.
pub fn min_second_difference(f: &dyn DifferentiableMap, region: &IntervalVector, rng: &mut ChaCha8Rng) -> f64 {
    let n = region.len();
    let mut worst = f64::INFINITY;
    for _ in 0..100 {
        let z = DVector::from_fn(n, |i, _| rng.random_range(region[i].lo()..=region[i].hi()));
        for _ in 0..100 {
            let d = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)).normalize();
            let h = 1e-3;
            let v = (f.eval(&(&z + &d * h)) - f.eval(&z) * 2.0 + f.eval(&(&z - &d * h))) / (h * h);
            let scale = 1.0 + f.eval(&z).amax();
            worst = worst.min(v.min() / scale);
        }
    }
    worst
}
