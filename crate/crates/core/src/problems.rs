//! Manufactured test problems and the well-driven displacement problems.

use std::sync::Arc;

use log::warn;
use nalgebra::{Matrix2, Vector2};

use crate::error::{Result, VemError};
use crate::forms::{CoefficientSet, Dispersion, SpaceField};
use crate::mesh::{generate, MeshFamily, Point, PolyMesh};
use crate::polybasis::edge_quadrature;

/// Exactness of the edge rule that integrates exact boundary fluxes.
const FLUX_DEGREE: usize = 12;

/// Spatial profile `g` of a manufactured concentration `c = t² g(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// `x²(x-1)² + y²(y-1)²`
    Polynomial,
    /// `1 - exp(-100 |x|²)`, a layer at the origin corner.
    CornerLayer,
}

/// Closed-form solution with `c = t² g`, `u = ∇c`,
/// `p = -c²/2 - 2c + η₁ t⁴ + η₂ t²` and the matching data.
///
/// With `A(c) = c + 2` these satisfy `A(c) u = -∇p` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    pub profile: Profile,
    pub porosity: f64,
    pub dispersion: Dispersion,
}

impl ExactSolution {
    fn g(&self, x: Point) -> f64 {
        match self.profile {
            Profile::Polynomial => (x.x * (x.x - 1.0)).powi(2) + (x.y * (x.y - 1.0)).powi(2),
            Profile::CornerLayer => 1.0 - (-100.0 * x.coords.norm_squared()).exp(),
        }
    }

    fn grad_g(&self, x: Point) -> Vector2<f64> {
        match self.profile {
            Profile::Polynomial => {
                let d = |s: f64| 2.0 * s * (s - 1.0) * (2.0 * s - 1.0);
                Vector2::new(d(x.x), d(x.y))
            }
            Profile::CornerLayer => x.coords * (200.0 * (-100.0 * x.coords.norm_squared()).exp()),
        }
    }

    fn hess_g(&self, x: Point) -> Matrix2<f64> {
        match self.profile {
            Profile::Polynomial => {
                let d2 = |s: f64| 2.0 * (6.0 * s * s - 6.0 * s + 1.0);
                Matrix2::new(d2(x.x), 0.0, 0.0, d2(x.y))
            }
            Profile::CornerLayer => {
                let e = (-100.0 * x.coords.norm_squared()).exp();
                let (a, b) = (x.x, x.y);
                Matrix2::new(1.0 - 200.0 * a * a, -200.0 * a * b, -200.0 * a * b, 1.0 - 200.0 * b * b) * (200.0 * e)
            }
        }
    }

    /// `(η₁, η₂)` making the pressure mean zero on the unit square.
    pub fn eta(&self) -> (f64, f64) {
        use std::f64::consts::PI;
        match self.profile {
            Profile::Polynomial => (17.0 / 6300.0, 2.0 / 15.0),
            // ∫ e^{-100|x|²} = π/400 and ∫ e^{-200|x|²} = π/800 up to erfc(10) ~ 2e-45
            Profile::CornerLayer => (0.5 * (1.0 - 3.0 * PI / 800.0), 2.0 * (1.0 - PI / 400.0)),
        }
    }

    pub fn c(&self, x: Point, t: f64) -> f64 {
        t * t * self.g(x)
    }

    pub fn c_t(&self, x: Point, t: f64) -> f64 {
        2.0 * t * self.g(x)
    }

    pub fn grad_c(&self, x: Point, t: f64) -> Vector2<f64> {
        self.grad_g(x) * (t * t)
    }

    pub fn hess_c(&self, x: Point, t: f64) -> Matrix2<f64> {
        self.hess_g(x) * (t * t)
    }

    pub fn u(&self, x: Point, t: f64) -> Vector2<f64> {
        self.grad_c(x, t)
    }

    /// `J[i][j] = ∂u_i/∂x_j`.
    pub fn jac_u(&self, x: Point, t: f64) -> Matrix2<f64> {
        self.hess_c(x, t)
    }

    pub fn p(&self, x: Point, t: f64) -> f64 {
        let c = self.c(x, t);
        let (e1, e2) = self.eta();
        -0.5 * c * c - 2.0 * c + e1 * t.powi(4) + e2 * t * t
    }

    /// `q = div u`.
    pub fn q(&self, x: Point, t: f64) -> f64 {
        self.jac_u(x, t).trace()
    }

    /// `div(D(u) ∇c)` for the constant porosity and the general dispersion tensor.
    fn dispersive_flux_divergence(&self, x: Point, t: f64) -> f64 {
        let Dispersion { d_m, d_l, d_t } = self.dispersion;
        let u = self.u(x, t);
        let j = self.jac_u(x, t);
        let gc = self.grad_c(x, t);
        let hc = self.hess_c(x, t);
        let lap = hc.trace();
        let speed = u.norm();
        if speed < crate::forms::SPEED_EPS {
            // |u| is not differentiable here; the molecular part is all that survives
            return self.porosity * d_m * lap;
        }
        let grad_speed = j.transpose() * u / speed;
        // D/φ = (d_m + d_t |u|) I + (d_l - d_t) u uᵀ / |u|
        let iso = (d_m + d_t * speed) * lap + d_t * grad_speed.dot(&gc);
        let udotg = u.dot(&gc);
        // ∂_i (u_i u_j / |u|) ∂_j c + (u_i u_j / |u|) ∂_ij c
        let aniso = j.trace() * udotg / speed + (j * u).dot(&gc) / speed - u.dot(&grad_speed) * udotg / (speed * speed)
            + (u.transpose() * hc * u)[(0, 0)] / speed;
        self.porosity * (iso + (d_l - d_t) * aniso)
    }

    /// `f = φ c_t + u·∇c - div(D(u)∇c)` and `q = div u`.
    pub fn forcing(&self, x: Point, t: f64) -> (f64, f64) {
        let f = self.porosity * self.c_t(x, t) + self.u(x, t).dot(&self.grad_c(x, t))
            - self.dispersive_flux_divergence(x, t);
        (f, self.q(x, t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WellKind {
    /// Injects fluid carrying the given concentration.
    Injector { concentration: f64 },
    Producer,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WellSpec {
    pub location: Point,
    /// Area flow per unit time.
    pub rate: f64,
    pub kind: WellKind,
}

/// Source data of a problem.
#[derive(Debug, Clone)]
pub enum Sources {
    None,
    /// Sources derived from an exact solution; `q⁺ = max(q, 0)`, `q⁻ = max(-q, 0)`
    /// and the transport load is `f + q⁺ c`.
    Manufactured(Arc<ExactSolution>),
    /// Point wells spread uniformly over the first cell containing each point.
    Wells(Vec<WellSpec>),
}

impl Sources {
    pub fn bind(&self, mesh: &PolyMesh) -> Result<BoundSources> {
        Ok(match self {
            Sources::None => BoundSources::None,
            Sources::Manufactured(e) => BoundSources::Manufactured(e.clone()),
            Sources::Wells(wells) => {
                let nc = mesh.num_cells();
                let (mut plus, mut minus, mut load) = (vec![0.0; nc], vec![0.0; nc], vec![0.0; nc]);
                for w in wells {
                    let k = mesh.locate(w.location).ok_or_else(|| {
                        VemError::InvalidArgument(format!(
                            "well at ({}, {}) lies outside the mesh",
                            w.location.x, w.location.y
                        ))
                    })?;
                    let density = w.rate / mesh.geometry(k).area;
                    match w.kind {
                        WellKind::Injector { concentration } => {
                            plus[k] += density;
                            load[k] += density * concentration;
                        }
                        WellKind::Producer => minus[k] += density,
                    }
                }
                BoundSources::Wells { plus, minus, load }
            }
        })
    }
}

/// Sources resolved on a particular mesh.
#[derive(Debug, Clone)]
pub enum BoundSources {
    None,
    Manufactured(Arc<ExactSolution>),
    /// Per-cell densities of `q⁺`, `q⁻` and `q⁺ ĉ`.
    Wells { plus: Vec<f64>, minus: Vec<f64>, load: Vec<f64> },
}

impl BoundSources {
    /// `q⁺ + q⁻` at `x` in `cell`.
    pub fn q_sum(&self, cell: usize, x: Point, t: f64) -> f64 {
        match self {
            BoundSources::None => 0.0,
            BoundSources::Manufactured(e) => e.q(x, t).abs(),
            BoundSources::Wells { plus, minus, .. } => plus[cell] + minus[cell],
        }
    }

    /// Right-hand side density of the transport equation.
    pub fn transport_load(&self, cell: usize, x: Point, t: f64) -> f64 {
        match self {
            BoundSources::None => 0.0,
            BoundSources::Manufactured(e) => {
                let (f, q) = e.forcing(x, t);
                f + q.max(0.0) * e.c(x, t)
            }
            BoundSources::Wells { load, .. } => load[cell],
        }
    }

    /// `∫_K G` with `G = q⁺ - q⁻`.
    pub fn g_integral(&self, mesh: &PolyMesh, cell: usize, t: f64) -> f64 {
        match self {
            BoundSources::None => 0.0,
            BoundSources::Manufactured(e) => {
                // boundary flux of the exact velocity, so the sum over cells telescopes
                let pts = mesh.polygon(cell);
                let n = pts.len();
                (0..n)
                    .map(|i| {
                        let (a, b) = (pts[i], pts[(i + 1) % n]);
                        let d = b - a;
                        let normal = Vector2::new(d.y, -d.x) / d.norm();
                        edge_quadrature(a, b, FLUX_DEGREE)
                            .expect("mesh edges have positive length")
                            .integrate(|x| e.u(x, t).dot(&normal))
                    })
                    .sum()
            }
            BoundSources::Wells { plus, minus, .. } => (plus[cell] - minus[cell]) * mesh.geometry(cell).area,
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, BoundSources::None)
    }
}

/// Everything needed to run one problem.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub coefficients: CoefficientSet,
    /// Lower-left corner and side length of the square domain.
    pub origin: Point,
    pub side: f64,
    pub final_time: f64,
    pub exact: Option<Arc<ExactSolution>>,
    pub sources: Sources,
    pub initial_concentration: SpaceField,
    pub default_family: MeshFamily,
}

impl std::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("coefficients", &self.coefficients)
            .field("origin", &self.origin)
            .field("side", &self.side)
            .field("final_time", &self.final_time)
            .field("exact", &self.exact)
            .field("sources", &self.sources)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    /// Generates a mesh of the problem domain.
    pub fn mesh(&self, family: MeshFamily, n: usize, seed: u64) -> Result<PolyMesh> {
        let unit = generate(family, n, seed)?;
        Ok(if self.side == 1.0 && self.origin == Point::origin() { unit } else { unit.scaled(self.side, self.origin) })
    }

    /// Logs suspicious data: unrealistic dispersion ordering or nonpositive
    /// porosity and mobility at sample points.
    pub fn check(&self) {
        if !self.coefficients.dispersion.is_realistic() {
            warn!("{}: dispersion parameters {:?} violate 0 < d_m <= d_t <= d_l", self.name, self.coefficients.dispersion);
        }
        for i in 0..=4 {
            for j in 0..=4 {
                let x = self.origin + Vector2::new(i as f64, j as f64) * (self.side / 4.0);
                let phi = (self.coefficients.porosity)(x);
                let a = self.coefficients.mobility(x, 0.0);
                let b = self.coefficients.mobility(x, 1.0);
                if !(phi > 0.0 && a > 0.0 && b > 0.0) {
                    warn!("{}: nonpositive coefficient at ({}, {}): φ={phi}, a(0)={a}, a(1)={b}", self.name, x.x, x.y);
                }
            }
        }
    }
}

fn manufactured(name: &str, profile: Profile) -> ProblemSpec {
    let dispersion = Dispersion { d_m: 0.02, d_l: 1.0, d_t: 1.0 };
    let exact = Arc::new(ExactSolution { profile, porosity: 1.0, dispersion });
    ProblemSpec {
        name: name.into(),
        coefficients: CoefficientSet {
            porosity: Arc::new(|_| 1.0),
            // a(c) = 1 / (c + 2)
            inverse_mobility: Arc::new(|_, c| c + 2.0),
            gravity: None,
            dispersion,
        },
        origin: Point::origin(),
        side: 1.0,
        final_time: 0.01,
        exact: Some(exact.clone()),
        sources: Sources::Manufactured(exact),
        initial_concentration: Arc::new(|_| 0.0),
        default_family: MeshFamily::Square,
    }
}

/// Smooth polynomial solution.
pub fn example1() -> ProblemSpec {
    manufactured("ex1", Profile::Polynomial)
}

/// Solution with a sharp layer at the origin corner.
pub fn example2() -> ProblemSpec {
    manufactured("ex2", Profile::CornerLayer)
}

/// Quarter five-spot displacement; `test` selects mobility ratio, molecular
/// diffusion and permeability layout.
pub fn example3(test: u8) -> Result<ProblemSpec> {
    let (ratio, d_m, layered): (f64, f64, bool) = match test {
        1 => (1.0, 10.0, false),
        2 => (41.0, 0.0, false),
        3 => (1.0, 10.0, true),
        4 => (41.0, 0.0, true),
        _ => return Err(VemError::UnknownProblem(format!("ex3-t{test}"))),
    };
    let dispersion = Dispersion { d_m, d_l: 50.0, d_t: 5.0 };
    let permeability = move |x: Point| if layered && x.y >= 500.0 { 20.0 } else { 80.0 };
    let b = ratio.powf(0.25) - 1.0;
    let spec = ProblemSpec {
        name: format!("ex3-t{test}"),
        coefficients: CoefficientSet {
            porosity: Arc::new(|_| 0.1),
            inverse_mobility: Arc::new(move |x, c| 1.0 / (permeability(x) * (1.0 + b * c).powi(4))),
            gravity: None,
            dispersion,
        },
        origin: Point::origin(),
        side: 1000.0,
        final_time: 3600.0,
        exact: None,
        sources: Sources::Wells(vec![
            WellSpec {
                location: Point::new(1000.0, 1000.0),
                rate: 30.0,
                kind: WellKind::Injector { concentration: 1.0 },
            },
            WellSpec { location: Point::new(0.0, 0.0), rate: 30.0, kind: WellKind::Producer },
        ]),
        initial_concentration: Arc::new(|_| 0.0),
        default_family: MeshFamily::Square,
    };
    Ok(spec)
}

/// Looks a problem up by its command-line name.
pub fn by_name(name: &str) -> Result<ProblemSpec> {
    match name {
        "ex1" => Ok(example1()),
        "ex2" => Ok(example2()),
        _ => match name.strip_prefix("ex3-t").and_then(|s| s.parse::<u8>().ok()) {
            Some(t) => example3(t),
            None => Err(VemError::UnknownProblem(name.into())),
        },
    }
}

pub const PROBLEM_NAMES: [&str; 6] = ["ex1", "ex2", "ex3-t1", "ex3-t2", "ex3-t3", "ex3-t4"];

/// `(f, q)` of a manufactured problem at `(x, t)`.
pub fn forcing_oracle(spec: &ProblemSpec, x: Point, t: f64) -> Result<(f64, f64)> {
    let exact = spec
        .exact
        .as_ref()
        .ok_or_else(|| VemError::InvalidArgument(format!("{} has no exact solution", spec.name)))?;
    Ok(exact.forcing(x, t))
}
