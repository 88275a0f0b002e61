//! DOF-to-polynomial projection matrices for the lowest-order spaces.
//!
//! Concentration DOFs of a cell are its edge averages and velocity DOFs are
//! edge-average fluxes along the global edge normals, both listed in the
//! cell's `cell_edges` order. Polynomial coefficients refer to the scaled
//! monomial basis `1, m_x, m_y` of the cell.

use nalgebra::{DMatrix, Vector2};
use rayon::prelude::*;

use crate::error::{Result, VemError};
use crate::mesh::{Point, PolyMesh};
use crate::polybasis::{polygon_quadrature, Quadrature, ScaledMonomialBasis};

/// Quadrature exactness for polynomial consistency terms.
pub const CONSISTENCY_DEGREE: usize = 2;
/// Quadrature exactness for non-polynomial data.
pub const DATA_DEGREE: usize = 6;

/// Projection matrices and cached geometry of one cell.
#[derive(Debug, Clone)]
pub struct CellProjectors {
    pub area: f64,
    pub centroid: Point,
    pub diameter: f64,
    pub perimeter: f64,
    /// Global edge ids in local order.
    pub edges: Vec<usize>,
    /// +1 when the global edge normal points out of the cell.
    pub signs: Vec<f64>,
    pub lengths: Vec<f64>,
    pub midpoints: Vec<Point>,
    /// Global edge normals.
    pub normals: Vec<Vector2<f64>>,
    /// Concentration DOFs to `Π₁^∇` coefficients, 3 × n.
    pub elliptic: DMatrix<f64>,
    /// Concentration DOFs to `Π₀(∇z)`, 2 × n.
    pub grad: DMatrix<f64>,
    /// Velocity DOFs to `Π₀ v`, 2 × n.
    pub velocity: DMatrix<f64>,
    /// Velocity DOFs to the constant `div v`, 1 × n.
    pub div: DMatrix<f64>,
    /// `𝒫₁` coefficients to concentration DOFs (midpoint values), n × 3.
    pub p1_dofs: DMatrix<f64>,
    /// Constant vector fields to velocity DOFs, n × 2.
    pub p0_velocity_dofs: DMatrix<f64>,
    pub consistency_quad: Quadrature,
    pub data_quad: Quadrature,
}

impl CellProjectors {
    pub fn new(mesh: &PolyMesh, cell: usize) -> Result<Self> {
        CellProjectors::with_degrees(mesh, cell, CONSISTENCY_DEGREE, DATA_DEGREE)
    }

    /// Same as [`CellProjectors::new`] with explicit quadrature exactness.
    pub fn with_degrees(mesh: &PolyMesh, cell: usize, consistency_degree: usize, data_degree: usize) -> Result<Self> {
        let k = cell;
        let degenerate = |reason: String| VemError::DegenerateCell { cell: k, reason };
        let geo = mesh.geometry(k);
        let ces = mesh.cell_edges(k);
        let n = ces.len();
        let edges: Vec<usize> = ces.iter().map(|ce| ce.edge).collect();
        let signs: Vec<f64> = ces.iter().map(|ce| ce.sign).collect();
        let lengths: Vec<f64> = edges.iter().map(|&e| mesh.edges()[e].length).collect();
        let midpoints: Vec<Point> = edges.iter().map(|&e| mesh.edges()[e].midpoint).collect();
        let normals: Vec<Vector2<f64>> = edges.iter().map(|&e| mesh.edges()[e].normal).collect();
        let perimeter: f64 = lengths.iter().sum();
        let (area, hk, xk) = (geo.area, geo.diameter, geo.centroid);
        if !(area > 0.0 && hk > 0.0) {
            return Err(degenerate(format!("area {area}, diameter {hk}")));
        }
        let basis = ScaledMonomialBasis::new(xk, hk, 1);

        let mut grad = DMatrix::zeros(2, n);
        let mut velocity = DMatrix::zeros(2, n);
        let mut div = DMatrix::zeros(1, n);
        let mut p1_dofs = DMatrix::zeros(n, 3);
        let mut p0_velocity_dofs = DMatrix::zeros(n, 2);
        for i in 0..n {
            let out = normals[i] * signs[i];
            let rel = midpoints[i] - xk;
            grad[(0, i)] = lengths[i] * out.x / area;
            grad[(1, i)] = lengths[i] * out.y / area;
            velocity[(0, i)] = signs[i] * lengths[i] * rel.x / area;
            velocity[(1, i)] = signs[i] * lengths[i] * rel.y / area;
            div[(0, i)] = signs[i] * lengths[i] / area;
            let m = basis.local(midpoints[i]);
            p1_dofs[(i, 0)] = 1.0;
            p1_dofs[(i, 1)] = m.x;
            p1_dofs[(i, 2)] = m.y;
            p0_velocity_dofs[(i, 0)] = normals[i].x;
            p0_velocity_dofs[(i, 1)] = normals[i].y;
        }

        // Gradient coefficients from (∇Π z, ∇m)_K = ∫_∂K z ∂m/∂n; ∇m_x = e_x / h_K
        // and the Gram of the gradients is |K| / h_K² I, so a = h_K Π₀∇z.
        // The constant matches the boundary mean of z.
        let mut elliptic = DMatrix::zeros(3, n);
        for i in 0..n {
            let a1 = hk * grad[(0, i)];
            let a2 = hk * grad[(1, i)];
            elliptic[(1, i)] = a1;
            elliptic[(2, i)] = a2;
            let lin: f64 = (0..n).map(|j| lengths[j] * (a1 * p1_dofs[(j, 1)] + a2 * p1_dofs[(j, 2)])).sum();
            elliptic[(0, i)] = (lengths[i] - lin) / perimeter;
        }

        let polygon = mesh.polygon(k);
        let consistency_quad =
            polygon_quadrature(&polygon, consistency_degree).map_err(|e| degenerate(e.to_string()))?;
        let data_quad = polygon_quadrature(&polygon, data_degree).map_err(|e| degenerate(e.to_string()))?;
        Ok(CellProjectors {
            area,
            centroid: xk,
            diameter: hk,
            perimeter,
            edges,
            signs,
            lengths,
            midpoints,
            normals,
            elliptic,
            grad,
            velocity,
            div,
            p1_dofs,
            p0_velocity_dofs,
            consistency_quad,
            data_quad,
        })
    }

    pub fn num_dofs(&self) -> usize {
        self.edges.len()
    }

    /// `Π₁⁰`, identical to `Π₁^∇` on the enhanced space.
    pub fn l2_concentration(&self) -> &DMatrix<f64> {
        &self.elliptic
    }

    pub fn basis(&self) -> ScaledMonomialBasis {
        ScaledMonomialBasis::new(self.centroid, self.diameter, 1)
    }

    /// Values `1, m_x, m_y` at `p`.
    pub fn monomials(&self, p: Point) -> [f64; 3] {
        let s = (p - self.centroid) / self.diameter;
        [1.0, s.x, s.y]
    }

    /// Evaluates a `𝒫₁` coefficient vector at `p`.
    pub fn eval_p1(&self, coeffs: &[f64; 3], p: Point) -> f64 {
        let m = self.monomials(p);
        coeffs[0] * m[0] + coeffs[1] * m[1] + coeffs[2] * m[2]
    }

    /// `Π₁ z` coefficients from local concentration DOFs.
    pub fn project_concentration(&self, local: &[f64]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (r, o) in out.iter_mut().enumerate() {
            *o = local.iter().enumerate().map(|(i, z)| self.elliptic[(r, i)] * z).sum();
        }
        out
    }

    pub fn project_gradient(&self, local: &[f64]) -> Vector2<f64> {
        apply2(&self.grad, local)
    }

    pub fn project_velocity(&self, local: &[f64]) -> Vector2<f64> {
        apply2(&self.velocity, local)
    }

    pub fn divergence(&self, local: &[f64]) -> f64 {
        local.iter().enumerate().map(|(i, v)| self.div[(0, i)] * v).sum()
    }

    /// Gathers the cell's entries of a global edge vector.
    pub fn gather(&self, global: &[f64]) -> Vec<f64> {
        self.edges.iter().map(|&e| global[e]).collect()
    }
}

fn apply2(m: &DMatrix<f64>, v: &[f64]) -> Vector2<f64> {
    let mut out = Vector2::zeros();
    for (i, x) in v.iter().enumerate() {
        out.x += m[(0, i)] * x;
        out.y += m[(1, i)] * x;
    }
    out
}

/// Projectors of every cell, built once per mesh.
#[derive(Debug, Clone)]
pub struct ProjectorSet {
    pub degree: usize,
    pub cells: Vec<CellProjectors>,
}

impl ProjectorSet {
    /// Builds all cell projectors; only `k = 0` is supported.
    pub fn new(mesh: &PolyMesh, k: usize) -> Result<Self> {
        ProjectorSet::with_degrees(mesh, k, CONSISTENCY_DEGREE, DATA_DEGREE)
    }

    pub fn with_degrees(mesh: &PolyMesh, k: usize, consistency_degree: usize, data_degree: usize) -> Result<Self> {
        if k != 0 {
            return Err(VemError::NotImplemented(format!("projectors for degree k = {k}; only k = 0 is available")));
        }
        let cells = (0..mesh.num_cells()).into_par_iter().map(|c| CellProjectors::with_degrees(mesh, c, consistency_degree, data_degree)).collect::<Result<_>>()?;
        Ok(ProjectorSet { degree: k, cells })
    }

    pub fn cell(&self, k: usize) -> &CellProjectors {
        &self.cells[k]
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}
