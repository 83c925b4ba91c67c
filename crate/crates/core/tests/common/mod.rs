#![allow(dead_code)]

pub mod dc;

use czdc::ConstrainedZonotope;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Random CZ together with a feasible `ξ₀` strictly inside the box.
pub fn random_cz<R: Rng>(rng: &mut R, n: usize, ng: usize, nh: usize) -> (ConstrainedZonotope, DVector<f64>) {
    let g = DMatrix::from_fn(n, ng, |_, _| rng.random_range(-1.0..1.0));
    let c = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let a = DMatrix::from_fn(nh, ng, |_, _| rng.random_range(-1.0..1.0));
    let xi0 = DVector::from_fn(ng, |_, _| rng.random_range(-0.7..0.7));
    let b = &a * &xi0;
    (ConstrainedZonotope::new(g, c, a, b).unwrap(), xi0)
}

/// Orthonormal basis of `ker A` from the SVD.
pub fn null_space(a: &DMatrix<f64>, ng: usize) -> DMatrix<f64> {
    if a.nrows() == 0 {
        return DMatrix::identity(ng, ng);
    }
    // pad so the SVD returns all ng right singular vectors
    let mut padded = DMatrix::zeros(ng.max(a.nrows()), ng);
    padded.rows_mut(0, a.nrows()).copy_from(a);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.unwrap();
    let smax = svd.singular_values.max().max(1e-300);
    let cols: Vec<DVector<f64>> = (0..ng)
        .filter(|&k| svd.singular_values[k] <= 1e-10 * smax)
        .map(|k| vt.row(k).transpose())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(ng, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Hit-and-run style walk inside `{Aξ = b, ‖ξ‖∞ ≤ 1}` starting at a feasible
/// `ξ₀`. Returns `count` points in `ξ` space.
pub fn walk_xi<R: Rng>(rng: &mut R, a: &DMatrix<f64>, xi0: &DVector<f64>, count: usize) -> Vec<DVector<f64>> {
    let ng = xi0.len();
    let basis = null_space(a, ng);
    let mut xi = xi0.clone();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        for _ in 0..3 {
            if basis.ncols() == 0 {
                break;
            }
            let coef = DVector::from_fn(basis.ncols(), |_, _| rng.random_range(-1.0..1.0));
            let d = &basis * coef;
            let (mut tlo, mut thi) = (f64::NEG_INFINITY, f64::INFINITY);
            for j in 0..ng {
                if d[j].abs() < 1e-14 {
                    continue;
                }
                let (t1, t2) = ((-1.0 - xi[j]) / d[j], (1.0 - xi[j]) / d[j]);
                tlo = tlo.max(t1.min(t2));
                thi = thi.min(t1.max(t2));
            }
            if tlo < thi {
                let t = rng.random_range(tlo..=thi);
                xi += &d * t;
                xi.apply(|v| *v = v.clamp(-1.0, 1.0));
            }
        }
        out.push(xi.clone());
    }
    out
}

/// Points of `z` obtained from `walk_xi`.
pub fn sample_points<R: Rng>(
    rng: &mut R,
    z: &ConstrainedZonotope,
    xi0: &DVector<f64>,
    count: usize,
) -> Vec<DVector<f64>> {
    walk_xi(rng, z.constraints(), xi0, count)
        .into_iter()
        .map(|xi| z.generators() * xi + z.center())
        .collect()
}

/// `ξ` certifies `x ∈ z` up to `tol`.
pub fn certifies(z: &ConstrainedZonotope, xi: &DVector<f64>, x: &DVector<f64>, tol: f64) -> bool {
    let point = (z.generators() * xi + z.center() - x).amax() <= tol;
    let cons = z.nh() == 0 || (z.constraints() * xi - z.offsets()).amax() <= tol;
    point && cons && xi.amax() <= 1.0 + tol
}

/// Vertices of `{Aξ = b, ‖ξ‖∞ ≤ 1}` by brute force: every choice of `nh`
/// free coordinates with the others at ±1.
pub fn xi_vertices(a: &DMatrix<f64>, b: &DVector<f64>, ng: usize) -> Vec<DVector<f64>> {
    let nh = a.nrows();
    let mut out = Vec::new();
    for mask in 0u32..(1 << ng) {
        if mask.count_ones() as usize != nh {
            continue;
        }
        let free: Vec<usize> = (0..ng).filter(|j| mask & (1 << j) != 0).collect();
        let fixed: Vec<usize> = (0..ng).filter(|j| mask & (1 << j) == 0).collect();
        let sub = DMatrix::from_fn(nh, nh, |i, k| a[(i, free[k])]);
        let inv = if nh == 0 {
            DMatrix::zeros(0, 0)
        } else {
            match sub.try_inverse() {
                Some(m) => m,
                None => continue,
            }
        };
        for signs in 0u32..(1 << fixed.len()) {
            let mut xi = DVector::zeros(ng);
            for (t, &j) in fixed.iter().enumerate() {
                xi[j] = if signs & (1 << t) != 0 { 1.0 } else { -1.0 };
            }
            if nh > 0 {
                let sol = &inv * (b - a * &xi);
                for (k, &j) in free.iter().enumerate() {
                    xi[j] = sol[k];
                }
            }
            if xi.amax() <= 1.0 + 1e-12 {
                out.push(xi);
            }
        }
    }
    out
}
