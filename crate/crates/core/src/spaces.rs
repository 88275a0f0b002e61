//! Global DOF layout, interpolation into the discrete spaces, and velocity
//! boundary conditions.

use nalgebra::Vector2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::mesh::{Point, PolyMesh};
use crate::polybasis::{edge_quadrature, polygon_quadrature};

/// Exactness of edge rules used for interpolation.
pub const INTERPOLATION_DEGREE: usize = 6;

/// Numbering of the lowest-order unknowns.
///
/// The Darcy system orders velocity (one per edge), pressure (one per cell)
/// and a zero-mean multiplier. Concentration has one unknown per edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofMap {
    pub num_edges: usize,
    pub num_cells: usize,
    pub boundary: Vec<bool>,
}

impl DofMap {
    pub fn new(mesh: &PolyMesh) -> Self {
        let mut boundary = vec![false; mesh.num_edges()];
        for &e in mesh.boundary_edges() {
            boundary[e] = true;
        }
        DofMap { num_edges: mesh.num_edges(), num_cells: mesh.num_cells(), boundary }
    }

    pub fn velocity_dim(&self) -> usize {
        self.num_edges
    }

    /// Pressure unknowns including the multiplier slot.
    pub fn pressure_dim(&self) -> usize {
        self.num_cells + 1
    }

    pub fn concentration_dim(&self) -> usize {
        self.num_edges
    }

    pub fn pressure(&self, cell: usize) -> usize {
        self.num_edges + cell
    }

    pub fn multiplier(&self) -> usize {
        self.num_edges + self.num_cells
    }

    pub fn darcy_dim(&self) -> usize {
        self.num_edges + self.num_cells + 1
    }
}

/// Discrete fields at one time level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionState {
    pub t: f64,
    /// Edge fluxes along global normals.
    pub u: Vec<f64>,
    /// Cell pressures with zero area-weighted mean.
    pub p: Vec<f64>,
    /// Edge averages of the concentration.
    pub c: Vec<f64>,
}

/// `(1/|e|) ∫_e v·n_e` for every edge, with the global normal.
pub fn interpolate_velocity<F>(mesh: &PolyMesh, v: F, t: f64) -> Vec<f64>
where
    F: Fn(Point, f64) -> Vector2<f64> + Sync,
{
    mesh.edges()
        .par_iter()
        .map(|e| {
            let (a, b) = (mesh.vertices()[e.vertices[0]], mesh.vertices()[e.vertices[1]]);
            let q = edge_quadrature(a, b, INTERPOLATION_DEGREE).expect("mesh edges have positive length");
            q.integrate(|x| v(x, t).dot(&e.normal)) / e.length
        })
        .collect()
}

/// Edge averages `(1/|e|) ∫_e z`.
pub fn interpolate_concentration<F>(mesh: &PolyMesh, z: F, t: f64) -> Vec<f64>
where
    F: Fn(Point, f64) -> f64 + Sync,
{
    mesh.edges()
        .par_iter()
        .map(|e| {
            let (a, b) = (mesh.vertices()[e.vertices[0]], mesh.vertices()[e.vertices[1]]);
            let q = edge_quadrature(a, b, INTERPOLATION_DEGREE).expect("mesh edges have positive length");
            q.integrate(|x| z(x, t)) / e.length
        })
        .collect()
}

/// Cell means of `q` with the area-weighted global mean removed.
pub fn project_pressure<F>(mesh: &PolyMesh, q: F, t: f64) -> Vec<f64>
where
    F: Fn(Point, f64) -> f64 + Sync,
{
    let means: Vec<f64> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|k| {
            let quad = polygon_quadrature(&mesh.polygon(k), 6).expect("mesh cells are valid polygons");
            quad.integrate(|x| q(x, t)) / mesh.geometry(k).area
        })
        .collect();
    remove_mean(mesh, means)
}

/// Subtracts the area-weighted mean from a cellwise field.
pub fn remove_mean(mesh: &PolyMesh, mut values: Vec<f64>) -> Vec<f64> {
    let area = mesh.area();
    let mean: f64 = values.iter().enumerate().map(|(k, v)| mesh.geometry(k).area * v).sum::<f64>() / area;
    for v in &mut values {
        *v -= mean;
    }
    values
}

/// Values imposed on boundary velocity DOFs.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum VelocityBoundary {
    /// `u·n = 0` on every boundary edge.
    #[default]
    NoFlow,
    /// Prescribed flux per edge, indexed by global edge id; interior entries are ignored.
    Prescribed(Vec<f64>),
}

impl VelocityBoundary {
    pub fn value(&self, edge: usize) -> f64 {
        match self {
            VelocityBoundary::NoFlow => 0.0,
            VelocityBoundary::Prescribed(v) => v[edge],
        }
    }
}

/// Fixes boundary velocity DOFs by symmetric row and column elimination.
///
/// Entries touching a constrained DOF are dropped, their column contribution
/// moves to the right-hand side, and the DOF row becomes the identity.
pub fn apply_velocity_bc(
    dofs: &DofMap,
    triplets: Vec<(usize, usize, f64)>,
    rhs: &mut [f64],
    bc: &VelocityBoundary,
) -> Vec<(usize, usize, f64)> {
    let fixed = |i: usize| i < dofs.num_edges && dofs.boundary[i];
    let mut out = Vec::with_capacity(triplets.len());
    for (r, c, v) in triplets {
        match (fixed(r), fixed(c)) {
            (false, false) => out.push((r, c, v)),
            (false, true) => rhs[r] -= v * bc.value(c),
            _ => {}
        }
    }
    for (e, &b) in dofs.boundary.iter().enumerate() {
        if b {
            out.push((e, e, 1.0));
            rhs[e] = bc.value(e);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, generate, MeshFamily};

    fn unit_cell() -> PolyMesh {
        let v = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)];
        build_mesh(v, vec![vec![0, 1, 2, 3]]).unwrap()
    }

    #[test]
    fn dimensions() {
        let m = generate(MeshFamily::Square, 2, 0).unwrap();
        let d = DofMap::new(&m);
        assert_eq!(d.velocity_dim(), 12);
        assert_eq!(d.pressure_dim(), 5);
        assert_eq!(d.concentration_dim(), 12);
        assert_eq!(d.darcy_dim(), 17);
        assert_eq!(d.boundary.iter().filter(|&&b| b).count(), 8);
    }

    #[test]
    fn interpolation_examples() {
        let m = unit_cell();
        let u = interpolate_velocity(&m, |_, _| Vector2::new(1.0, 0.0), 0.0);
        for (e, ui) in m.edges().iter().zip(&u) {
            assert!((ui - e.normal.x).abs() < 1e-15);
        }
        assert!(interpolate_velocity(&m, |_, _| Vector2::zeros(), 0.0).iter().all(|&x| x == 0.0));
        assert!(interpolate_concentration(&m, |_, _| 1.0, 0.0).iter().all(|&x| (x - 1.0).abs() < 1e-15));
        let z = interpolate_concentration(&m, |x, _| x.x, 0.0);
        for (e, zi) in m.edges().iter().zip(&z) {
            assert!((zi - e.midpoint.x).abs() < 1e-15);
        }
    }

    #[test]
    fn pressure_mean_removed() {
        let m = unit_cell();
        assert!(project_pressure(&m, |_, _| 5.0, 0.0)[0].abs() < 1e-15);
        assert!(project_pressure(&m, |x, _| x.x, 0.0)[0].abs() < 1e-15);
        let g = generate(MeshFamily::Triangular, 3, 0).unwrap();
        let p = project_pressure(&g, |x, t| x.x * x.y + t, 2.0);
        let mean: f64 = p.iter().enumerate().map(|(k, v)| v * g.geometry(k).area).sum();
        assert!(mean.abs() < 1e-15);
    }

    #[test]
    fn bc_elimination() {
        let m = generate(MeshFamily::Square, 2, 0).unwrap();
        let d = DofMap::new(&m);
        let interior = (0..d.num_edges).find(|&e| !d.boundary[e]).unwrap();
        let boundary = (0..d.num_edges).find(|&e| d.boundary[e]).unwrap();
        let trip = vec![(interior, interior, 2.0), (interior, boundary, 3.0), (boundary, interior, 3.0)];
        let mut rhs = vec![0.0; d.darcy_dim()];
        let mut vals = vec![0.0; d.num_edges];
        vals[boundary] = 2.0;
        let out = apply_velocity_bc(&d, trip, &mut rhs, &VelocityBoundary::Prescribed(vals));
        assert!(out.contains(&(interior, interior, 2.0)));
        assert!(out.contains(&(boundary, boundary, 1.0)));
        assert_eq!(rhs[interior], -6.0);
        assert_eq!(rhs[boundary], 2.0);
    }
}
