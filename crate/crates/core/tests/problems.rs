mod common;

use common::fd_forcing;
use nalgebra::Vector2;

use vemmd::mesh::Point;
use vemmd::problems::{by_name, example1, example2, example3, forcing_oracle, ExactSolution, PROBLEM_NAMES};

/// Composite 5-point Gauss–Legendre rule on `cells × cells` squares of the unit square.
fn unit_square_integral(cells: usize, f: impl Fn(Point) -> f64) -> f64 {
    let nodes = [
        (0.0, 128.0 / 225.0),
        (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
        (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
        (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
        (0.906_179_845_938_664, 0.236_926_885_056_189_1),
    ];
    let h = 1.0 / cells as f64;
    let mut total = 0.0;
    for i in 0..cells {
        for j in 0..cells {
            for (sx, wx) in nodes {
                for (sy, wy) in nodes {
                    let x = Point::new((i as f64 + 0.5 * (sx + 1.0)) * h, (j as f64 + 0.5 * (sy + 1.0)) * h);
                    total += wx * wy * f(x);
                }
            }
        }
    }
    total * h * h / 4.0
}

fn exact(name: &str) -> ExactSolution {
    (*by_name(name).unwrap().exact.unwrap()).clone()
}

#[test]
fn forcing_matches_finite_differences() {
    for name in ["ex1", "ex2"] {
        let spec = by_name(name).unwrap();
        let e = exact(name);
        let mut worst: f64 = 0.0;
        for i in 0..10 {
            for j in 0..10 {
                for s in 1..=5 {
                    let x = Point::new(0.05 + 0.1 * i as f64, 0.05 + 0.1 * j as f64);
                    let t = 0.002 * s as f64;
                    let (f, q) = forcing_oracle(&spec, x, t).unwrap();
                    let (f_fd, q_fd) = fd_forcing(&e, x, t, 1e-4);
                    // the terms can cancel, so scale by their sizes rather than the sum
                    let scale = f.abs() + e.c_t(x, t).abs() + e.u(x, t).norm() * e.grad_c(x, t).norm() + t * t;
                    worst = worst.max((f - f_fd).abs() / scale).max((q - q_fd).abs() / (e.hess_c(x, t).norm() + t * t));
                }
            }
        }
        eprintln!("{name}: worst relative mismatch {worst:e}");
        assert!(worst <= 1e-6, "{name}: worst relative mismatch {worst:e}");
    }
}

#[test]
fn exact_velocity_has_no_normal_flux() {
    for e in [exact("ex1"), exact("ex2")] {
        for t in [0.001, 0.01, 1.0] {
            for i in 0..100 {
                let s = (i as f64 + 0.5) / 100.0;
                let sides = [
                    (Point::new(s, 0.0), Vector2::new(0.0, -1.0)),
                    (Point::new(1.0, s), Vector2::new(1.0, 0.0)),
                    (Point::new(s, 1.0), Vector2::new(0.0, 1.0)),
                    (Point::new(0.0, s), Vector2::new(-1.0, 0.0)),
                ];
                for (x, n) in sides {
                    assert!(e.u(x, t).dot(&n).abs() < 1e-12, "{:?} at {x:?}", e.profile);
                }
            }
        }
    }
}

#[test]
fn exact_pressure_has_zero_mean() {
    for e in [exact("ex1"), exact("ex2")] {
        for t in [0.0, 0.003, 0.01, 0.5, 1.0] {
            let mean = unit_square_integral(64, |x| e.p(x, t));
            let scale = unit_square_integral(64, |x| e.p(x, t).abs()).max(1e-300);
            assert!(mean.abs() <= 1e-8 * scale.max(t * t), "{:?} t={t}: mean {mean:e}", e.profile);
        }
    }
}

#[test]
fn corner_layer_normalization_constants() {
    let (eta1, eta2) = exact("ex2").eta();
    let i1 = unit_square_integral(64, |x| (-100.0 * x.coords.norm_squared()).exp());
    let i2 = unit_square_integral(64, |x| (-200.0 * x.coords.norm_squared()).exp());
    // ∫ g = 1 - I₁ and ∫ g² = 1 - 2 I₁ + I₂
    assert!((eta2 - 2.0 * (1.0 - i1)).abs() < 1e-12);
    assert!((eta1 - 0.5 * (1.0 - 2.0 * i1 + i2)).abs() < 1e-12);
    let (p1, p2) = exact("ex1").eta();
    assert!((p2 - 2.0 * unit_square_integral(8, |x| (x.x * (x.x - 1.0)).powi(2) + (x.y * (x.y - 1.0)).powi(2))).abs() < 1e-14);
    let g2 = unit_square_integral(8, |x| ((x.x * (x.x - 1.0)).powi(2) + (x.y * (x.y - 1.0)).powi(2)).powi(2));
    assert!((p1 - 0.5 * g2).abs() < 1e-14);
}

#[test]
fn corner_source_strength() {
    let e = example2().exact.unwrap();
    for t in [0.0, 0.001, 0.01, 0.3] {
        assert!((e.q(Point::origin(), t) - 400.0 * t * t).abs() <= 1e-12 * (1.0 + t * t));
    }
    let e1 = example1().exact.unwrap();
    assert!((e1.c(Point::new(0.5, 0.5), 2.0) - 0.5).abs() < 1e-15);
}

#[test]
fn registry_and_well_problems() {
    for name in PROBLEM_NAMES {
        let spec = by_name(name).unwrap();
        assert_eq!(spec.name, name);
    }
    assert!(by_name("ex4").is_err());
    assert!(example3(5).is_err());
    let t2 = example3(2).unwrap();
    let t1 = example3(1).unwrap();
    let x = Point::new(10.0, 20.0);
    // M = 41 makes the injected fluid 41 times more mobile
    assert!((t2.coefficients.mobility(x, 1.0) / t2.coefficients.mobility(x, 0.0) - 41.0).abs() < 1e-12);
    assert!((t1.coefficients.mobility(x, 1.0) - t1.coefficients.mobility(x, 0.0)).abs() < 1e-15);
    let t3 = example3(3).unwrap();
    let lower = t3.coefficients.mobility(Point::new(500.0, 100.0), 0.0);
    let upper = t3.coefficients.mobility(Point::new(500.0, 900.0), 0.0);
    assert!((lower / upper - 4.0).abs() < 1e-12);
    let mesh = t1.mesh(vemmd::mesh::MeshFamily::Square, 8, 0).unwrap();
    let bound = t1.sources.bind(&mesh).unwrap();
    let net: f64 = (0..mesh.num_cells()).map(|k| bound.g_integral(&mesh, k, 0.0)).sum();
    assert!(net.abs() < 1e-12);
    assert!(forcing_oracle(&t1, x, 0.0).is_err());
}
