//! Element matrices and load vectors of the discrete scheme.
//!
//! Matrix entry `(i, j)` holds the form with trial DOF `j` and test DOF `i`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

use crate::mesh::Point;
use crate::projectors::CellProjectors;

/// Below this speed the dispersion tensor reduces to molecular diffusion.
pub const SPEED_EPS: f64 = 1e-14;

pub type SpaceField = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
/// Function of position and concentration.
pub type ConcentrationField = Arc<dyn Fn(Point, f64) -> f64 + Send + Sync>;
pub type GravityField = Arc<dyn Fn(Point, f64) -> Vector2<f64> + Send + Sync>;

/// Molecular diffusion and longitudinal/transverse dispersion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dispersion {
    pub d_m: f64,
    pub d_l: f64,
    pub d_t: f64,
}

impl Dispersion {
    /// `0 < d_m <= d_t <= d_l` is the physically usual ordering.
    pub fn is_realistic(&self) -> bool {
        0.0 < self.d_m && self.d_m <= self.d_t && self.d_t <= self.d_l
    }

    pub fn tensor(&self, u: Vector2<f64>, phi: f64) -> Matrix2<f64> {
        dispersion_tensor(u, phi, self.d_m, self.d_l, self.d_t)
    }
}

/// `φ [d_m I + |u| (d_l E(u) + d_t (I - E(u)))]` with `E(u) = u uᵀ / |u|²`.
pub fn dispersion_tensor(u: Vector2<f64>, phi: f64, d_m: f64, d_l: f64, d_t: f64) -> Matrix2<f64> {
    let speed = u.norm();
    if speed < SPEED_EPS {
        return Matrix2::identity() * (phi * d_m);
    }
    let e = u * u.transpose() / (speed * speed);
    (Matrix2::identity() * d_m + (e * d_l + (Matrix2::identity() - e) * d_t) * speed) * phi
}

/// Physical coefficients of the flow and transport equations.
#[derive(Clone)]
pub struct CoefficientSet {
    pub porosity: SpaceField,
    /// `A(x, c) = 1 / a(x, c)`, the inverse mobility.
    pub inverse_mobility: ConcentrationField,
    /// `γ(x, c)`; `None` means no gravity.
    pub gravity: Option<GravityField>,
    pub dispersion: Dispersion,
}

impl CoefficientSet {
    pub fn mobility(&self, x: Point, c: f64) -> f64 {
        1.0 / (self.inverse_mobility)(x, c)
    }
}

impl fmt::Debug for CoefficientSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientSet")
            .field("dispersion", &self.dispersion)
            .field("gravity", &self.gravity.is_some())
            .finish_non_exhaustive()
    }
}

/// `(I - D Π)` for a DOF-to-polynomial map `pi` and its inverse `dofs`.
fn kernel_part(dofs: &DMatrix<f64>, pi: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::identity(pi.ncols(), pi.ncols()) - dofs * pi
}

/// Weighted Gram matrix `∫_K w m_α m_β` of `1, m_x, m_y`.
fn weighted_gram(cell: &CellProjectors, w: impl Fn(Point) -> f64) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(3, 3);
    for (p, wq) in cell.data_quad.iter() {
        let m = cell.monomials(p);
        let s = wq * w(p);
        for i in 0..3 {
            for j in 0..3 {
                h[(i, j)] += s * m[i] * m[j];
            }
        }
    }
    h
}

pub fn cell_mean(cell: &CellProjectors, f: impl Fn(Point) -> f64) -> f64 {
    cell.data_quad.integrate(f) / cell.area
}

/// Mass matrix `Π₁ᵀ H_φ Π₁ + ν_M |K| (I - D Π₁)ᵀ (I - D Π₁)` with `ν_M = |mean φ|`.
pub fn local_mass(cell: &CellProjectors, porosity: impl Fn(Point) -> f64) -> DMatrix<f64> {
    let p = &cell.elliptic;
    let h = weighted_gram(cell, &porosity);
    let nu = cell_mean(cell, &porosity).abs();
    let s = kernel_part(&cell.p1_dofs, p);
    p.transpose() * h * p + s.transpose() * s * (nu * cell.area)
}

/// Diffusion matrix with `D(Π₀ u)` against `Π₀∇` of both arguments, plus
/// `ν_M (d_m + d_t |Π₀ u|)` times the plain DOF product on `(I - Π₁^∇)`.
pub fn local_diffusion(cell: &CellProjectors, u_local: &[f64], phi_mean: f64, disp: &Dispersion) -> DMatrix<f64> {
    let u0 = cell.project_velocity(u_local);
    let d = disp.tensor(u0, phi_mean) * cell.area;
    let g = &cell.grad;
    let d_dyn = DMatrix::from_row_slice(2, 2, &[d[(0, 0)], d[(0, 1)], d[(1, 0)], d[(1, 1)]]);
    let speed = u0.norm();
    let speed = if speed < SPEED_EPS { 0.0 } else { speed };
    let nu = phi_mean.abs() * (disp.d_m + disp.d_t * speed);
    let s = kernel_part(&cell.p1_dofs, &cell.elliptic);
    g.transpose() * d_dyn * g + s.transpose() * s * nu
}

/// Skew convection form `½[(u·∇c, z) + ((q⁺ + q⁻) c, z) - (u, c ∇z)]`,
/// all arguments replaced by their projections.
pub fn local_convection(cell: &CellProjectors, u_local: &[f64], q_sum: impl Fn(Point) -> f64) -> DMatrix<f64> {
    let n = cell.num_dofs();
    let u0 = cell.project_velocity(u_local);
    let p = &cell.elliptic;
    // ∫_K Π₁ z = |K| a₀(z) since the linear monomials have zero mean.
    let flux: Vec<f64> = (0..n).map(|j| u0.x * cell.grad[(0, j)] + u0.y * cell.grad[(1, j)]).collect();
    let mut t = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            t[(i, j)] = cell.area * (flux[j] * p[(0, i)] - flux[i] * p[(0, j)]);
        }
    }
    let mass = p.transpose() * weighted_gram(cell, q_sum) * p;
    (t + mass) * 0.5
}

/// Darcy matrix `w Π₀ᵀ Π₀ + ν_A |K| (I - D Π₀)ᵀ (I - D Π₀)` where
/// `w = ∫_K A(x, Π₁ c)` and `ν_A = |mean_K A(x, Π₀ c)|`.
pub fn local_darcy(cell: &CellProjectors, c_local: &[f64], inverse_mobility: impl Fn(Point, f64) -> f64) -> DMatrix<f64> {
    let pc = cell.project_concentration(c_local);
    let w = cell.data_quad.integrate(|x| inverse_mobility(x, cell.eval_p1(&pc, x)));
    let nu = cell_mean(cell, |x| inverse_mobility(x, pc[0])).abs();
    let v = &cell.velocity;
    let s = kernel_part(&cell.p0_velocity_dofs, v);
    v.transpose() * v * w + s.transpose() * s * (nu * cell.area)
}

/// `B(v, 1_K) = -Σ sign |e| v_e`.
pub fn local_div(cell: &CellProjectors) -> DVector<f64> {
    DVector::from_iterator(cell.num_dofs(), cell.signs.iter().zip(&cell.lengths).map(|(s, l)| -s * l))
}

/// `∫_K S Π₁ φ_i` for each local concentration basis function.
pub fn transport_rhs(cell: &CellProjectors, source: impl Fn(Point) -> f64) -> DVector<f64> {
    let mut moments = [0.0; 3];
    for (x, w) in cell.data_quad.iter() {
        let s = w * source(x);
        let m = cell.monomials(x);
        for r in 0..3 {
            moments[r] += s * m[r];
        }
    }
    let p = &cell.elliptic;
    DVector::from_iterator(cell.num_dofs(), (0..cell.num_dofs()).map(|i| (0..3).map(|r| moments[r] * p[(r, i)]).sum()))
}

/// `∫_K γ(x, Π₁ c) · Π₀ φ_i` for each local velocity basis function.
pub fn darcy_rhs(cell: &CellProjectors, c_local: &[f64], gravity: Option<&GravityField>) -> DVector<f64> {
    let n = cell.num_dofs();
    let Some(gamma) = gravity else {
        return DVector::zeros(n);
    };
    let pc = cell.project_concentration(c_local);
    let mut g = Vector2::zeros();
    for (x, w) in cell.data_quad.iter() {
        g += gamma(x, cell.eval_p1(&pc, x)) * w;
    }
    DVector::from_iterator(n, (0..n).map(|i| g.x * cell.velocity[(0, i)] + g.y * cell.velocity[(1, i)]))
}

/// Load vectors of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalRhs {
    pub transport: DVector<f64>,
    pub darcy: DVector<f64>,
    /// `-∫_K G`.
    pub div: f64,
}

pub fn local_rhs(
    cell: &CellProjectors,
    c_local: &[f64],
    source: impl Fn(Point) -> f64,
    gravity: Option<&GravityField>,
    g_integral: f64,
) -> LocalRhs {
    LocalRhs { transport: transport_rhs(cell, source), darcy: darcy_rhs(cell, c_local, gravity), div: -g_integral }
}
