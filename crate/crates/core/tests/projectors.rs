mod common;

use common::{dense_integral, green_moment, regular_polygon, sample_cells, Poly};
use nalgebra::{DMatrix, DVector, Vector2};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vemmd::mesh::{build_mesh, Point};
use vemmd::polybasis::{monomial_gram, polygon_quadrature};
use vemmd::projectors::{CellProjectors, ProjectorSet};
use vemmd::spaces::{interpolate_concentration, interpolate_velocity};

const CELLS: usize = 150;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

#[test]
fn polynomial_reproduction_on_random_cells() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (mesh, k) in sample_cells(CELLS, 1) {
        let cell = CellProjectors::new(&mesh, k).unwrap();
        let coeffs = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        let p1 = |x: Point, _t: f64| cell.eval_p1(&coeffs, x);
        let dofs = cell.gather(&interpolate_concentration(&mesh, p1, 0.0));
        let ell = cell.project_concentration(&dofs);
        let l2: Vec<f64> = (cell.l2_concentration() * DVector::from_column_slice(&dofs)).iter().copied().collect();
        for r in 0..3 {
            assert!(close(ell[r], coeffs[r], 1e-12), "elliptic {ell:?} vs {coeffs:?}");
            assert_eq!(ell[r], l2[r]);
        }
        let g = cell.project_gradient(&dofs);
        let g_exact = Vector2::new(coeffs[1], coeffs[2]) / cell.diameter;
        assert!((g - g_exact).norm() <= 1e-12 * (1.0 + g_exact.norm()), "{g:?} vs {g_exact:?}");

        let w = Vector2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let vdofs = cell.gather(&interpolate_velocity(&mesh, |_, _| w, 0.0));
        assert!((cell.project_velocity(&vdofs) - w).norm() <= 1e-12 * w.norm());
        assert!(cell.divergence(&vdofs).abs() <= 1e-12 * w.norm() / cell.diameter);

        // (x - x0)/2 lies in the local velocity space: div = 1, mean = (x_K - x0)/2
        let x0 = Point::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let radial = cell.gather(&interpolate_velocity(&mesh, |x, _| (x - x0) * 0.5, 0.0));
        assert!(close(cell.divergence(&radial), 1.0, 1e-12));
        let mean = (cell.centroid - x0) * 0.5;
        assert!((cell.project_velocity(&radial) - mean).norm() <= 1e-11 * (cell.diameter + mean.norm()));
    }
}

#[test]
fn projections_are_idempotent() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for (mesh, k) in sample_cells(CELLS, 2) {
        let cell = CellProjectors::new(&mesh, k).unwrap();
        let n = cell.num_dofs();
        let z: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let once = cell.project_concentration(&z);
        let redofs: Vec<f64> = (&cell.p1_dofs * DVector::from_column_slice(&once)).iter().copied().collect();
        let twice = cell.project_concentration(&redofs);
        for r in 0..3 {
            assert!(close(twice[r], once[r], 1e-12), "{twice:?} vs {once:?}");
        }

        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let pv = cell.project_velocity(&v);
        let vdofs: Vec<f64> = (&cell.p0_velocity_dofs * DVector::from_column_slice(&[pv.x, pv.y])).iter().copied().collect();
        assert!((cell.project_velocity(&vdofs) - pv).norm() <= 1e-12 * (1.0 + pv.norm()));

        // the stabilization kernels: (I - D Π) annihilates polynomial DOF vectors
        let kernel = DMatrix::identity(n, n) - &cell.p1_dofs * &cell.elliptic;
        assert!((&kernel * &cell.p1_dofs).amax() < 1e-12);
        let vkernel = DMatrix::identity(n, n) - &cell.p0_velocity_dofs * &cell.velocity;
        assert!((&vkernel * &cell.p0_velocity_dofs).amax() < 1e-12);
    }
}

/// `∫_K P z m = ∫_K z m` for the L² projection of a quartic onto `𝒫₁`, with
/// the projection built from the library's Gram matrix and quadrature and
/// the check done with exact boundary moments.
#[test]
fn l2_projection_of_quartics_is_orthogonal() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for (mesh, k) in sample_cells(CELLS, 3) {
        let cell = CellProjectors::new(&mesh, k).unwrap();
        let pts = mesh.polygon(k);
        let z = Poly::random(&mut rng, 4);
        let quad = polygon_quadrature(&pts, 5).unwrap();
        let gram = monomial_gram(&pts, 1).unwrap();
        let rhs = DVector::from_iterator(3, (0..3).map(|r| quad.integrate(|x| z.eval(x) * cell.monomials(x)[r])));
        let coef = gram.clone().cholesky().unwrap().solve(&rhs);
        let (xc, h) = (cell.centroid, cell.diameter);
        // moments about the centroid avoid cancellation on far-translated cells
        let local: Vec<Point> = pts.iter().map(|p| Point::from(p - xc)).collect();
        let zs = z.shifted(xc);
        let raw = |da: usize, db: usize| -> f64 {
            zs.0.iter().map(|&(a, b, c)| c * green_moment(&local, a + da, b + db)).sum()
        };
        let z_m = [raw(0, 0), raw(1, 0) / h, raw(0, 1) / h];
        let scale = zs.abs_integral_bound(&local).max(1e-300);
        for r in 0..3 {
            let pz_m: f64 = (0..3).map(|s| gram[(r, s)] * coef[s]).sum();
            assert!((pz_m - z_m[r]).abs() <= 1e-10 * scale, "row {r}: {pz_m} vs {}", z_m[r]);
        }
    }
}

/// `z = x²` on a regular pentagon: the DOF-based elliptic projector against a
/// brute-force minimizer of `|∇(z - p)|²` with the boundary-mean constraint.
#[test]
fn elliptic_projector_of_x_squared_on_pentagon() {
    let c = Point::new(0.3, -0.2);
    let pts = regular_polygon(5, 0.7, c);
    let mesh = build_mesh(pts.clone(), vec![(0..5).collect()]).unwrap();
    let cell = CellProjectors::new(&mesh, 0).unwrap();
    let dofs = cell.gather(&interpolate_concentration(&mesh, |x, _| x.x * x.x, 0.0));
    let pi = cell.project_concentration(&dofs);

    // normal equations of min_p ∫|∇z - ∇p|²: ∇p equals the mean of ∇z = (2x, 0)
    let area = dense_integral(&pts, c, 64, |_| 1.0);
    let gx = dense_integral(&pts, c, 64, |x| 2.0 * x.x) / area;
    let grad = Vector2::new(gx, 0.0);
    // boundary mean of x² in closed form, then fix the constant of p
    let (mut len, mut zb, mut lin_b) = (0.0, 0.0, 0.0);
    for i in 0..5 {
        let (a, b) = (pts[i], pts[(i + 1) % 5]);
        let l = (b - a).norm();
        len += l;
        zb += l * (a.x * a.x + a.x * b.x + b.x * b.x) / 3.0;
        lin_b += l * grad.dot(&((a.coords + b.coords) * 0.5 - cell.centroid.coords));
    }
    let constant = (zb - lin_b) / len;
    let expected = [constant, grad.x * cell.diameter, grad.y * cell.diameter];
    for r in 0..3 {
        assert!((pi[r] - expected[r]).abs() < 1e-12, "coefficient {r}: {} vs {}", pi[r], expected[r]);
    }
    // the constraint itself, checked at the edge midpoints (exact for linear functions)
    let bmean: f64 = (0..5).map(|i| cell.lengths[i] * cell.eval_p1(&pi, cell.midpoints[i])).sum::<f64>() / len;
    assert!((bmean - zb / len).abs() < 1e-12);
}

#[test]
fn projector_set_covers_every_cell() {
    for (mesh, _) in sample_cells(10, 4) {
        let set = ProjectorSet::new(&mesh, 0).unwrap();
        assert_eq!(set.len(), mesh.num_cells());
        assert!(ProjectorSet::new(&mesh, 1).is_err());
    }
}
