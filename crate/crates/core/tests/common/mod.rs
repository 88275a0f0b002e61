//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{Matrix2, Vector2};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vemmd::mesh::{generate, MeshFamily, Point, PolyMesh};
use vemmd::problems::ExactSolution;

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Exact `∫_K x^a y^b` of a counter-clockwise polygon by Green's theorem,
/// `∮ x^{a+1} y^b / (a+1) dy`, with every edge integral expanded in closed form.
pub fn green_moment(polygon: &[Point], a: usize, b: usize) -> f64 {
    let n = polygon.len();
    let mut total = 0.0;
    for i in 0..n {
        let (p, q) = (polygon[i], polygon[(i + 1) % n]);
        let (dx, dy) = (q.x - p.x, q.y - p.y);
        // x(s)^{a+1} y(s)^b on [0, 1], expanded in powers of s
        let mut edge = 0.0;
        for i1 in 0..=a + 1 {
            for j1 in 0..=b {
                let coef = binomial(a + 1, i1) * p.x.powi((a + 1 - i1) as i32) * dx.powi(i1 as i32)
                    * binomial(b, j1) * p.y.powi((b - j1) as i32) * dy.powi(j1 as i32);
                edge += coef / (i1 + j1 + 1) as f64;
            }
        }
        total += edge * dy / (a + 1) as f64;
    }
    total
}

/// A polynomial `Σ c_ab x^a y^b` as a coefficient list.
#[derive(Debug, Clone)]
pub struct Poly(pub Vec<(usize, usize, f64)>);

impl Poly {
    pub fn random(rng: &mut ChaCha8Rng, degree: usize) -> Poly {
        let mut terms = Vec::new();
        for a in 0..=degree {
            for b in 0..=degree - a {
                terms.push((a, b, rng.random_range(-1.0..1.0)));
            }
        }
        Poly(terms)
    }

    pub fn eval(&self, p: Point) -> f64 {
        self.0.iter().map(|&(a, b, c)| c * p.x.powi(a as i32) * p.y.powi(b as i32)).sum()
    }

    /// Coefficients of `s ↦ p(c + s)`.
    pub fn shifted(&self, c: Point) -> Poly {
        let mut terms = Vec::new();
        for &(a, b, coef) in &self.0 {
            for i in 0..=a {
                for j in 0..=b {
                    let w = coef * binomial(a, i) * c.x.powi((a - i) as i32) * binomial(b, j) * c.y.powi((b - j) as i32);
                    terms.push((i, j, w));
                }
            }
        }
        Poly(terms)
    }

    pub fn exact_integral(&self, polygon: &[Point]) -> f64 {
        self.0.iter().map(|&(a, b, c)| c * green_moment(polygon, a, b)).sum()
    }

    pub fn abs_integral_bound(&self, polygon: &[Point]) -> f64 {
        self.0.iter().map(|&(a, b, c)| (c * green_moment(polygon, a, b)).abs()).sum()
    }
}

/// Dense quadrature independent of the library: each fan triangle from the
/// first vertex of a convex polygon, or from `kernel` otherwise, is split into
/// `m²` subtriangles with the three-edge-midpoint rule.
pub fn dense_integral(polygon: &[Point], kernel: Point, m: usize, f: impl Fn(Point) -> f64) -> f64 {
    let n = polygon.len();
    let mut total = 0.0;
    for i in 0..n {
        let (a, b) = (polygon[i], polygon[(i + 1) % n]);
        let (e1, e2) = (a - kernel, b - kernel);
        let area = 0.5 * (e1.x * e2.y - e1.y * e2.x);
        let node = |s: f64, t: f64| kernel + e1 * (s / m as f64) + e2 * (t / m as f64);
        let sub = area / (m * m) as f64;
        let tri = |p: Point, q: Point, r: Point| {
            sub / 3.0 * (f(Point::from((p.coords + q.coords) * 0.5)) + f(Point::from((q.coords + r.coords) * 0.5))
                + f(Point::from((r.coords + p.coords) * 0.5)))
        };
        for s in 0..m {
            for t in 0..m - s {
                let (sf, tf) = (s as f64, t as f64);
                total += tri(node(sf, tf), node(sf + 1.0, tf), node(sf, tf + 1.0));
                if s + t + 1 < m {
                    total += tri(node(sf + 1.0, tf), node(sf + 1.0, tf + 1.0), node(sf, tf + 1.0));
                }
            }
        }
    }
    total
}

/// A regular polygon with `n` vertices, circumradius `r`, centered at `c`.
pub fn regular_polygon(n: usize, r: f64, c: Point) -> Vec<Point> {
    (0..n)
        .map(|i| {
            let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64 + 0.3;
            Point::new(c.x + r * a.cos(), c.y + r * a.sin())
        })
        .collect()
}

/// `count` (mesh, cell) pairs drawn from all five families, with random
/// refinement, seed, scaling and translation.
pub fn sample_cells(count: usize, seed: u64) -> Vec<(PolyMesh, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let family = MeshFamily::ALL[i % 5];
        let n = rng.random_range(2..7usize);
        let mesh = generate(family, n, rng.random_range(0..1000u64)).expect("generator succeeds");
        let scale = 10f64.powf(rng.random_range(-2.0..2.0));
        let origin = Point::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        let mesh = mesh.scaled(scale, origin);
        let k = rng.random_range(0..mesh.num_cells());
        out.push((mesh, k));
    }
    out
}

/// Fourth-order central difference of `f` along `dir`.
fn d1(f: &dyn Fn(Point) -> f64, x: Point, dir: Vector2<f64>, h: f64) -> f64 {
    let at = |s: f64| f(x + dir * (s * h));
    (-at(2.0) + 8.0 * at(1.0) - 8.0 * at(-1.0) + at(-2.0)) / (12.0 * h)
}

/// `(f, q)` of a manufactured solution using only point values of `c` and `u`:
/// `f = φ c_t + u·∇c - div(D(u)∇c)` and `q = div u`, all by finite differences.
pub fn fd_forcing(e: &ExactSolution, x: Point, t: f64, h: f64) -> (f64, f64) {
    let ex = Vector2::new(1.0, 0.0);
    let ey = Vector2::new(0.0, 1.0);
    let phi = e.porosity;
    let d = e.dispersion;
    let c_at = |p: Point| e.c(p, t);
    let grad = |p: Point| Vector2::new(d1(&c_at, p, ex, h), d1(&c_at, p, ey, h));
    let flux = |p: Point| {
        let u = e.u(p, t);
        let s = u.norm();
        let tensor = Matrix2::identity() * (phi * (d.d_m + d.d_t * s)) + u * u.transpose() * (phi * (d.d_l - d.d_t) / s);
        tensor * grad(p)
    };
    let div_flux = d1(&|p| flux(p).x, x, ex, h) + d1(&|p| flux(p).y, x, ey, h);
    let c_t = {
        let at = |s: f64| e.c(x, t + s * h);
        (-at(2.0) + 8.0 * at(1.0) - 8.0 * at(-1.0) + at(-2.0)) / (12.0 * h)
    };
    let q = d1(&|p| e.u(p, t).x, x, ex, h) + d1(&|p| e.u(p, t).y, x, ey, h);
    (phi * c_t + e.u(x, t).dot(&grad(x)) - div_flux, q)
}

/// Largest error of the Darcy solve for `u = w`, `p = -w·x` (unit mobility,
/// no sources, flux prescribed on the whole boundary) on one mesh, relative
/// to `|w|`: the discrete fields must reproduce the interpolant and the cell
/// means exactly.
pub fn patch_test_error(mesh: &PolyMesh, w: Vector2<f64>) -> f64 {
    use std::sync::Arc;
    use vemmd::problems::{example1, Sources};
    use vemmd::projectors::ProjectorSet;
    use vemmd::solver::solve_darcy;
    use vemmd::spaces::{interpolate_velocity, project_pressure, DofMap, VelocityBoundary};

    let mut spec = example1();
    spec.exact = None;
    spec.sources = Sources::None;
    spec.coefficients.inverse_mobility = Arc::new(|_, _| 1.0);
    let projectors = ProjectorSet::new(mesh, 0).unwrap();
    let dofs = DofMap::new(mesh);
    let sources = spec.sources.bind(mesh).unwrap();
    let u_exact = interpolate_velocity(mesh, |_, _| w, 0.0);
    let bc = VelocityBoundary::Prescribed(u_exact.clone());
    let c = vec![0.0; mesh.num_edges()];
    let sol = solve_darcy(mesh, &projectors, &dofs, &spec, &sources, &c, 0.0, &bc, 1e-12).unwrap();
    let p_exact = project_pressure(mesh, |x, _| -w.dot(&x.coords), 0.0);
    let du = sol.u.iter().zip(&u_exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let dp = sol.p.iter().zip(&p_exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    du.max(dp).max(sol.multiplier.abs()) / w.norm()
}
