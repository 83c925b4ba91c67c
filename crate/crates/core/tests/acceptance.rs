//! Acceptance gate. Prints one line per criterion and exits nonzero if any
//! of them fails.

mod common;

use std::process::ExitCode;

use common::dc::{boxed, library, min_second_difference, probes, sheared};
use common::{certifies, random_cz, sample_points, walk_xi, xi_vertices};
use czdc::dcprog::{
    box_hull_polytope, convexify, eig_lower_bound, linearization_enclosure, tighten_parallelotope, DEFAULT_VERTEX_CAP,
};
use czdc::harness::{run_monte_carlo, RunConfig, RunMetrics};
use czdc::models::{build_attitude, build_quad2d, BenchmarkId};
use czdc::{IntervalMatrix, ReductionTargets, SimplexSolver, Zonotope};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 2024;

struct Verdict {
    ok: bool,
    detail: String,
}

fn verdict(ok: bool, detail: String) -> Verdict {
    Verdict { ok, detail }
}

fn monte_carlo(id: BenchmarkId, consistency: bool) -> RunMetrics {
    let mut cfg = RunConfig::for_benchmark(id);
    cfg.seed = SEED;
    cfg.filter.use_consistency = consistency;
    run_monte_carlo(&cfg).expect("valid configuration")
}

fn concat(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn containment(quad: &RunMetrics, att: &RunMetrics) -> Verdict {
    let bad = quad.containment_violations + att.containment_violations;
    let failures = quad.failures.len() + att.failures.len();
    let empty = quad.empty_stages + att.empty_stages;
    verdict(
        bad == 0 && failures == 0,
        format!(
            "violations quad2d {} attitude {}, aborted runs {failures}, empty stages {empty} ({} + {} steps)",
            quad.containment_violations,
            att.containment_violations,
            quad.records.len(),
            att.records.len()
        ),
    )
}

fn quad_precision(quad: &RunMetrics) -> Verdict {
    let by_step = quad.area_by_step();
    let k = by_step.len();
    let (mid, tail) = (mean(&by_step[11..21]), mean(&by_step[k - 10..]));
    let bounded = by_step.iter().all(|a| a.is_finite()) && tail <= 2.0 * mid;
    let ok = (1.0..=3.0).contains(&quad.a_box) && bounded;
    verdict(
        ok,
        format!(
            "A = {:.4} (accept [1, 3]); mean area k 11..20 {mid:.4}, last 10 {tail:.4}",
            quad.a_box
        ),
    )
}

fn attitude_precision(att: &RunMetrics, without: &RunMetrics) -> Verdict {
    let ratio = att.a_box / without.a_box;
    let ok = att.a_box <= 1e-5 && ratio <= 0.5 && att.a_box.is_finite();
    verdict(
        ok,
        format!(
            "A = {:.4e} (accept <= 1e-5); without consistency {:.4e}, ratio {ratio:.4}",
            att.a_box, without.a_box
        ),
    )
}

fn timing(quad: &RunMetrics, att: &RunMetrics) -> Verdict {
    let ratio = att.t_cpu_ms / quad.t_cpu_ms;
    let ok = quad.t_cpu_ms < 100.0 && att.t_cpu_ms < 10_000.0 && ratio >= 5.0;
    verdict(
        ok,
        format!(
            "quad2d {:.3} ms, attitude {:.3} ms, ratio {ratio:.1}",
            quad.t_cpu_ms, att.t_cpu_ms
        ),
    )
}

fn enclosures() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut bad, mut total) = (0usize, 0usize);
    for case in library() {
        for p in [box_hull_polytope(&case.region), sheared(&case.region, &mut rng)] {
            let zbar = p.center().clone();
            let Ok(r) = linearization_enclosure(&case.dc, case.f.as_ref(), &p, &zbar, DEFAULT_VERTEX_CAP) else {
                bad += 1;
                continue;
            };
            let bounds = r.interval_hull();
            let (f0, jac) = (case.f.eval(&zbar), case.f.jacobian(&zbar));
            for z in probes(&p, &mut rng) {
                let err = case.f.eval(&z) - &f0 - &jac * (&z - &zbar);
                total += 1;
                bad += usize::from(!bounds.contains_with_tol(&err, 1e-9));
            }
        }
    }
    verdict(bad == 0, format!("{bad} of {total} probes outside the enclosure"))
}

fn hulls_and_tightening() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let mut lp = SimplexSolver::default();
    let (mut outside, mut worst_gap) = (0usize, 0.0f64);
    for inst in 0..10 {
        let (ng, nh) = (3 + inst % 4, inst % 3);
        let (z, xi0) = random_cz(&mut rng, 2, ng, nh);
        let hull = z.interval_hull(&mut lp).expect("nonempty");
        let mut inner = [(f64::INFINITY, f64::NEG_INFINITY); 2];
        let vertices = xi_vertices(z.constraints(), z.offsets(), ng)
            .into_iter()
            .map(|xi| z.generators() * xi + z.center());
        for p in sample_points(&mut rng, &z, &xi0, 100_000).into_iter().chain(vertices) {
            outside += usize::from(!hull.contains_with_tol(&p, 1e-9));
            for (i, e) in inner.iter_mut().enumerate() {
                *e = (e.0.min(p[i]), e.1.max(p[i]));
            }
        }
        for (i, e) in inner.iter().enumerate() {
            worst_gap = worst_gap.max(e.0 - hull[i].lo()).max(hull[i].hi() - e.1);
        }
    }

    let mut nest_bad = 0usize;
    for _ in 0..20 {
        let (p, xi0) = random_cz(&mut rng, 2, 6, 2);
        let hull = p.interval_hull(&mut lp).expect("nonempty");
        let t = DMatrix::from_row_slice(
            2,
            2,
            &[1.0, rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), 1.0],
        );
        let c = Zonotope::new(t * DMatrix::from_diagonal(&(hull.rad() * 4.0)), hull.mid()).expect("shapes");
        let tight = tighten_parallelotope(&c, &p, &mut lp).expect("tightening");
        let (tcz, ccz) = (tight.to_cz(), c.to_cz());
        for x in sample_points(&mut rng, &p, &xi0, 500) {
            nest_bad += usize::from(!tcz.contains_point(&x, &mut lp));
        }
        for _ in 0..500 {
            let s = DVector::from_fn(2, |_, _| rng.random_range(-1.0..=1.0));
            nest_bad += usize::from(!ccz.contains_point(&(tight.generators() * s + tight.center()), &mut lp));
        }
    }
    let ok = outside == 0 && worst_gap <= 1e-6 && nest_bad == 0;
    verdict(
        ok,
        format!("{outside} samples outside hulls, max gap {worst_gap:.2e}; P in T in C violations {nest_bad}"),
    )
}

fn exactness_and_reduction() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let mut lp = SimplexSolver::default();
    let (mut bad, mut total) = (0usize, 0usize);
    let mut tally = |ok: bool| {
        total += 1;
        bad += usize::from(!ok);
    };
    for _ in 0..200 {
        let n = rng.random_range(1..=3);
        let ng = rng.random_range(1..=4);
        let (nh, ngy) = (rng.random_range(0..ng), rng.random_range(1..=4));
        let (x, xi0) = random_cz(&mut rng, n, ng, nh);
        let (y, eta0) = random_cz(&mut rng, n, ngy, 0);
        let l = DMatrix::from_fn(2, n, |_, _| rng.random_range(-2.0..2.0));
        let m = DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0));
        let (sum, img, prod) = (
            x.minkowski_sum(&y).unwrap(),
            x.affine_map(&l, &m).unwrap(),
            x.cartesian_product(&y),
        );
        let xs = walk_xi(&mut rng, x.constraints(), &xi0, 10);
        let ys = walk_xi(&mut rng, y.constraints(), &eta0, 10);
        for (xi, eta) in xs.iter().zip(&ys) {
            let (px, py) = (x.generators() * xi + x.center(), y.generators() * eta + y.center());
            tally(certifies(&sum, &concat(xi, eta), &(&px + &py), 1e-9));
            tally(certifies(&img, xi, &(&l * &px + &m), 1e-9));
            tally(certifies(&prod, &concat(xi, eta), &concat(&px, &py), 1e-9));
        }

        // intersection with W built around M·x₀, both directions
        let nw = rng.random_range(1..=2);
        let mm = DMatrix::from_fn(nw, n, |_, _| rng.random_range(-1.0..1.0));
        let ngw = rng.random_range(nw..=nw + 2);
        let (w0, w_eta) = random_cz(&mut rng, nw, ngw, 0);
        let x0 = x.generators() * &xi0 + x.center();
        let w = w0
            .translate(&(&mm * &x0 - (w0.generators() * &w_eta + w0.center())))
            .unwrap();
        let z = x.generalized_intersection(&w, &mm).unwrap();
        let zeta0 = concat(&xi0, &w_eta);
        tally(certifies(&z, &zeta0, &x0, 1e-9));
        for zeta in walk_xi(&mut rng, z.constraints(), &zeta0, 10) {
            let p = z.generators() * &zeta + z.center();
            tally(certifies(&x, &zeta.rows(0, ng).into_owned(), &p, 1e-8));
            tally(certifies(&w, &zeta.rows(ng, ngw).into_owned(), &(&mm * &p), 1e-8));
        }
    }
    let exact_bad = bad;
    let exact_total = total;

    let (mut red_bad, mut red_total) = (0usize, 0usize);
    for case in 0..12 {
        let n = 2 + case % 2;
        let (x, xi0) = random_cz(&mut rng, n, 12, 5);
        let t = ReductionTargets::new(case % 3, n + 3 + case % 4);
        let r = x.reduce(t, &mut lp).expect("nonempty");
        red_total += 1;
        red_bad += usize::from(r.nh() > t.phi_c || r.ng() > t.phi_g);
        for p in sample_points(&mut rng, &x, &xi0, 1000) {
            red_total += 1;
            red_bad += usize::from(!r.contains_point(&p, &mut lp));
        }
    }
    verdict(
        exact_bad == 0 && red_bad == 0,
        format!("exactness {exact_bad} of {exact_total}; reduction {red_bad} of {red_total}"),
    )
}

/// All `2^(n(n+1)/2)` symmetric vertex matrices of `[lo, hi]`.
fn vertex_matrices(lo: &DMatrix<f64>, hi: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
    let n = lo.nrows();
    let slots: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    (0u32..(1 << slots.len()))
        .map(|mask| {
            let mut m = DMatrix::zeros(n, n);
            for (t, &(i, j)) in slots.iter().enumerate() {
                let v = if mask & (1 << t) != 0 { hi[(i, j)] } else { lo[(i, j)] };
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
            m
        })
        .collect()
}

fn convexification() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let mut worst = f64::INFINITY;
    let quad = build_quad2d();
    let att = build_attitude();
    let mut att_box: Vec<(f64, f64)> = vec![(-1.0, 1.0); 4];
    att_box.extend(std::iter::repeat_n((-0.3, 0.3), 3));
    att_box.extend(std::iter::repeat_n((-3e-3, 3e-3), 3));
    let regions = [
        (
            quad.model.f.clone(),
            boxed(&[(-3.0, 3.0), (-3.0, 3.0), (-0.1, 0.1), (-0.1, 0.1)]),
        ),
        (
            quad.model.f.clone(),
            boxed(&[(0.5, 6.0), (-5.0, -2.0), (-0.1, 0.1), (-0.1, 0.1)]),
        ),
        (att.model.f.clone(), boxed(&att_box)),
        (
            att.model.h.clone(),
            boxed(&[
                (-1.0, 1.0),
                (-1.0, 1.0),
                (-1.0, 1.0),
                (-1.0, 1.0),
                (-0.1, 0.1),
                (-0.1, 0.1),
                (-0.1, 0.1),
                (-0.1, 0.1),
                (-0.1, 0.1),
                (-0.1, 0.1),
            ]),
        ),
        (att.model.g.clone().expect("invariant"), boxed(&[(-1.0, 1.0); 4])),
    ];
    let mut failed = 0usize;
    for (f, region) in regions {
        match convexify(f, &region) {
            Ok(dc) => worst = worst.min(min_second_difference(dc.a.as_ref(), &region, &mut rng)),
            Err(_) => failed += 1,
        }
    }

    let (mut eig_bad, mut eig_total) = (0usize, 0usize);
    for _ in 0..100 {
        let n = rng.random_range(1..=4);
        let mut lo = DMatrix::zeros(n, n);
        let mut hi = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let (a, b): (f64, f64) = (rng.random_range(-2.0..2.0), rng.random_range(0.0..0.6));
                lo[(i, j)] = a - b;
                hi[(i, j)] = a + b;
                lo[(j, i)] = a - b;
                hi[(j, i)] = a + b;
            }
        }
        let bound = eig_lower_bound(&IntervalMatrix::new(lo.clone(), hi.clone()));
        for m in vertex_matrices(&lo, &hi) {
            eig_total += 1;
            eig_bad += usize::from(m.symmetric_eigenvalues().min() < bound - 1e-12);
        }
    }
    let ok = failed == 0 && worst >= -1e-6 && eig_bad == 0;
    verdict(
        ok,
        format!("min scaled second difference {worst:.2e} ({failed} failed); eig bound {eig_bad} of {eig_total} vertex matrices below"),
    )
}

fn main() -> ExitCode {
    let quad = monte_carlo(BenchmarkId::Quad2d, true);
    let att = monte_carlo(BenchmarkId::Attitude, true);
    let att_plain = monte_carlo(BenchmarkId::Attitude, false);
    let results = [
        ("containment", containment(&quad, &att)),
        ("quad2d precision", quad_precision(&quad)),
        ("attitude precision", attitude_precision(&att, &att_plain)),
        ("per-step time", timing(&quad, &att)),
        ("linearization enclosures", enclosures()),
        ("hull and tightening LPs", hulls_and_tightening()),
        ("set operation exactness and reduction", exactness_and_reduction()),
        ("convexification", convexification()),
    ];
    let mut all = true;
    for (i, (name, v)) in results.iter().enumerate() {
        all &= v.ok;
        println!(
            "criterion {} {name}: {} ({})",
            i + 1,
            if v.ok { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
