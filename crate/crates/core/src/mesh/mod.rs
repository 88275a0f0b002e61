//! Polygonal meshes: topology, orientation, cached geometry.
//!
//! Every cell is stored as a counter-clockwise vertex loop. Edges are
//! deduplicated and carry a fixed global orientation: the tangent runs from
//! the lower vertex index to the higher one and the global unit normal is
//! that tangent rotated clockwise. A cell traversing an edge in the global
//! direction sees the global normal as its outward normal (sign `+1`).

mod generate;
mod io;
mod quality;
mod voronoi;

use std::collections::HashMap;

use nalgebra::{Point2, Vector2};

use crate::error::MeshError;

pub use generate::{generate, MeshFamily};
pub use io::MeshFile;
pub use quality::{quality, QualityReport};

pub type Point = Point2<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// Endpoints, lower index first; the global tangent points from `vertices[0]` to `vertices[1]`.
    pub vertices: [usize; 2],
    pub length: f64,
    /// Global unit normal.
    pub normal: Vector2<f64>,
    pub midpoint: Point,
    /// The cell that first referenced the edge, and the neighbour across it if any.
    pub cells: (usize, Option<usize>),
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.cells.1.is_none()
    }
}

/// An edge as seen from one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellEdge {
    pub edge: usize,
    /// `+1.0` when the global normal is the outward normal of the cell, `-1.0` otherwise.
    pub sign: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGeometry {
    pub area: f64,
    pub centroid: Point,
    pub diameter: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolyMesh {
    vertices: Vec<Point>,
    cells: Vec<Vec<usize>>,
    edges: Vec<Edge>,
    cell_edges: Vec<Vec<CellEdge>>,
    boundary_edges: Vec<usize>,
    geometry: Vec<CellGeometry>,
    h: f64,
}

/// z-component of the planar cross product.
pub fn cross(a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Twice the signed area of a closed polygon (positive when counter-clockwise).
pub fn signed_area2(pts: &[Point]) -> f64 {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            a.x * b.y - b.x * a.y
        })
        .sum()
}

/// Area and centroid of a simple polygon given counter-clockwise.
pub fn area_centroid(pts: &[Point]) -> (f64, Point) {
    // Shift to the first vertex to limit cancellation on translated cells.
    let o = pts[0];
    let n = pts.len();
    let mut a2 = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..n {
        let p = pts[i] - o;
        let q = pts[(i + 1) % n] - o;
        let w = p.x * q.y - q.x * p.y;
        a2 += w;
        cx += (p.x + q.x) * w;
        cy += (p.y + q.y) * w;
    }
    let area = 0.5 * a2;
    (area, Point::new(o.x + cx / (3.0 * a2), o.y + cy / (3.0 * a2)))
}

/// Largest vertex-to-vertex distance.
pub fn diameter(pts: &[Point]) -> f64 {
    let mut d2: f64 = 0.0;
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            d2 = d2.max((b - a).norm_squared());
        }
    }
    d2.sqrt()
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    cross(b - a, c - a)
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test, touching included.
pub(crate) fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

fn check_simple(cell: usize, pts: &[Point]) -> Result<(), MeshError> {
    let n = pts.len();
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        // adjacent edge folding back onto this one
        let c = pts[(i + 2) % n];
        let (t1, t2) = (b - a, c - b);
        if cross(t1, t2) == 0.0 && t1.dot(&t2) < 0.0 {
            return Err(MeshError::NotSimple { cell, first: i, second: (i + 1) % n });
        }
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (p, q) = (pts[j], pts[(j + 1) % n]);
            if segments_intersect(a, b, p, q) {
                return Err(MeshError::NotSimple { cell, first: i, second: j });
            }
        }
    }
    Ok(())
}

/// Builds a mesh from raw vertices and vertex loops.
///
/// Clockwise loops are reversed. Fails on out-of-range indices, repeated or
/// coincident vertices, self-intersecting loops, non-manifold or
/// inconsistently oriented edges, and vertices no cell uses.
pub fn build_mesh(vertices: Vec<Point>, cells: Vec<Vec<usize>>) -> Result<PolyMesh, MeshError> {
    if cells.is_empty() {
        return Err(MeshError::Empty);
    }
    if let Some(v) = vertices.iter().position(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(MeshError::NonFiniteVertex { vertex: v });
    }
    let mut used = vec![false; vertices.len()];
    let mut loops = Vec::with_capacity(cells.len());
    let mut geometry = Vec::with_capacity(cells.len());
    for (k, cell) in cells.into_iter().enumerate() {
        if cell.len() < 3 {
            return Err(MeshError::TooFewVertices { cell: k, len: cell.len() });
        }
        for (i, &v) in cell.iter().enumerate() {
            if v >= vertices.len() {
                return Err(MeshError::VertexOutOfRange { cell: k, vertex: v, count: vertices.len() });
            }
            if cell[..i].contains(&v) {
                return Err(MeshError::RepeatedVertex { cell: k, vertex: v });
            }
        }
        let mut cell = cell;
        let mut pts: Vec<Point> = cell.iter().map(|&v| vertices[v]).collect();
        for i in 0..pts.len() {
            if pts[i] == pts[(i + 1) % pts.len()] {
                return Err(MeshError::DegenerateEdge { cell: k, a: cell[i], b: cell[(i + 1) % cell.len()] });
            }
        }
        check_simple(k, &pts)?;
        let a2 = signed_area2(&pts);
        if a2 == 0.0 {
            return Err(MeshError::ZeroArea { cell: k });
        }
        if a2 < 0.0 {
            cell.reverse();
            pts.reverse();
        }
        let (area, centroid) = area_centroid(&pts);
        geometry.push(CellGeometry { area, centroid, diameter: diameter(&pts) });
        for &v in &cell {
            used[v] = true;
        }
        loops.push(cell);
    }
    if let Some(v) = used.iter().position(|u| !u) {
        return Err(MeshError::DanglingVertex { vertex: v });
    }

    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edges: Vec<Edge> = Vec::new();
    // direction in which the owning cell traverses each edge
    let mut first_dir: Vec<bool> = Vec::new();
    let mut cell_edges = Vec::with_capacity(loops.len());
    for (k, cell) in loops.iter().enumerate() {
        let n = cell.len();
        let mut local = Vec::with_capacity(n);
        for i in 0..n {
            let (a, b) = (cell[i], cell[(i + 1) % n]);
            let key = (a.min(b), a.max(b));
            let forward = a < b;
            let e = match index.get(&key) {
                Some(&e) => {
                    if edges[e].cells.1.is_some() {
                        return Err(MeshError::NonManifoldEdge { a: key.0, b: key.1 });
                    }
                    if first_dir[e] == forward {
                        return Err(MeshError::InconsistentOrientation {
                            a: key.0,
                            b: key.1,
                            first: edges[e].cells.0,
                            second: k,
                        });
                    }
                    edges[e].cells.1 = Some(k);
                    e
                }
                None => {
                    let (p, q) = (vertices[key.0], vertices[key.1]);
                    let t = q - p;
                    let length = t.norm();
                    edges.push(Edge {
                        vertices: [key.0, key.1],
                        length,
                        normal: Vector2::new(t.y, -t.x) / length,
                        midpoint: Point::from((p.coords + q.coords) * 0.5),
                        cells: (k, None),
                    });
                    first_dir.push(forward);
                    index.insert(key, edges.len() - 1);
                    edges.len() - 1
                }
            };
            local.push(CellEdge { edge: e, sign: if forward { 1.0 } else { -1.0 } });
        }
        cell_edges.push(local);
    }
    let boundary_edges = (0..edges.len()).filter(|&e| edges[e].is_boundary()).collect();
    let h = geometry.iter().map(|g| g.diameter).fold(0.0, f64::max);
    Ok(PolyMesh { vertices, cells: loops, edges, cell_edges, boundary_edges, geometry, h })
}

impl PolyMesh {
    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Counter-clockwise vertex loops.
    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Edges of cell `k` in loop order: entry `i` joins loop vertices `i` and `i + 1`.
    pub fn cell_edges(&self, k: usize) -> &[CellEdge] {
        &self.cell_edges[k]
    }

    pub fn boundary_edges(&self) -> &[usize] {
        &self.boundary_edges
    }

    pub fn geometry(&self, k: usize) -> &CellGeometry {
        &self.geometry[k]
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Mesh size, the largest cell diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn polygon(&self, k: usize) -> Vec<Point> {
        self.cells[k].iter().map(|&v| self.vertices[v]).collect()
    }

    /// Outward unit normal of the `i`-th edge of cell `k`.
    pub fn outward_normal(&self, k: usize, i: usize) -> Vector2<f64> {
        let ce = self.cell_edges[k][i];
        self.edges[ce.edge].normal * ce.sign
    }

    /// Total area.
    pub fn area(&self) -> f64 {
        self.geometry.iter().map(|g| g.area).sum()
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.vertices {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        (lo, hi)
    }

    /// Maps every vertex through `x -> origin + scale * x`.
    pub fn scaled(&self, scale: f64, origin: Point) -> PolyMesh {
        let vertices = self.vertices.iter().map(|p| origin + p.coords * scale).collect();
        build_mesh(vertices, self.cells.clone()).expect("a positive scaling preserves validity")
    }

    /// Index of the first cell whose closed polygon contains `p`.
    pub fn locate(&self, p: Point) -> Option<usize> {
        (0..self.num_cells()).find(|&k| {
            let pts = self.polygon(k);
            let n = pts.len();
            let scale = self.geometry[k].diameter;
            let eps = 1e-12 * scale * scale;
            // on an edge counts as inside
            let on_edge = (0..n).any(|i| {
                let (a, b) = (pts[i], pts[(i + 1) % n]);
                orient(a, b, p).abs() <= eps && on_segment(a, b, p)
            });
            on_edge || winding_contains(&pts, p)
        })
    }
}

fn winding_contains(pts: &[Point], p: Point) -> bool {
    let n = pts.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid2x2() -> PolyMesh {
        let mut v = Vec::new();
        for j in 0..3 {
            for i in 0..3 {
                v.push(Point::new(i as f64 * 0.5, j as f64 * 0.5));
            }
        }
        let id = |i: usize, j: usize| j * 3 + i;
        let mut cells = Vec::new();
        for j in 0..2 {
            for i in 0..2 {
                cells.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        build_mesh(v, cells).unwrap()
    }

    fn unit_square() -> PolyMesh {
        let v = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)];
        build_mesh(v, vec![vec![0, 1, 2, 3]]).unwrap()
    }

    #[test]
    fn counts_on_two_by_two_grid() {
        let m = grid2x2();
        assert_eq!(m.vertices().len(), 9);
        assert_eq!(m.num_edges(), 12);
        assert_eq!(m.num_cells(), 4);
        assert_eq!(m.boundary_edges().len(), 8);
    }

    #[test]
    fn single_square_geometry() {
        let m = unit_square();
        let g = m.geometry(0);
        assert!((g.area - 1.0).abs() < 1e-15);
        assert!((g.centroid - Point::new(0.5, 0.5)).norm() < 1e-15);
        assert!((g.diameter - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(m.h(), g.diameter);
    }

    #[test]
    fn clockwise_loops_are_reoriented() {
        let v = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)];
        let m = build_mesh(v, vec![vec![3, 2, 1, 0]]).unwrap();
        assert!(m.geometry(0).area > 0.0);
        assert!(signed_area2(&m.polygon(0)) > 0.0);
    }

    #[test]
    fn closed_polygon_normals_sum_to_zero() {
        let m = grid2x2();
        for k in 0..m.num_cells() {
            let s: Vector2<f64> = (0..m.cell_edges(k).len())
                .map(|i| m.outward_normal(k, i) * m.edges()[m.cell_edges(k)[i].edge].length)
                .sum();
            assert!(s.norm() < 1e-12);
        }
    }

    #[test]
    fn interior_edges_have_opposite_signs() {
        let m = grid2x2();
        let mut seen: HashMap<usize, Vec<f64>> = HashMap::new();
        for k in 0..m.num_cells() {
            for ce in m.cell_edges(k) {
                seen.entry(ce.edge).or_default().push(ce.sign);
            }
        }
        for (e, signs) in seen {
            if m.edges()[e].is_boundary() {
                assert_eq!(signs.len(), 1);
            } else {
                assert_eq!(signs.len(), 2);
                assert_eq!(signs[0], -signs[1]);
            }
        }
    }

    #[test]
    fn rejects_bow_tie() {
        let v = vec![Point::new(0.0, 0.0), Point::new(1.0, 1.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        assert!(matches!(build_mesh(v, vec![vec![0, 1, 2, 3]]), Err(MeshError::NotSimple { .. })));
    }

    #[test]
    fn rejects_dangling_vertex() {
        let v = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0), Point::new(5.0, 5.0)];
        assert_eq!(build_mesh(v, vec![vec![0, 1, 2]]), Err(MeshError::DanglingVertex { vertex: 3 }));
    }

    #[test]
    fn rejects_collapsed_edge() {
        let v = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        assert!(matches!(build_mesh(v, vec![vec![0, 1, 2, 3]]), Err(MeshError::DegenerateEdge { .. })));
    }

    #[test]
    fn rejects_overlapping_cells() {
        // both triangles cover the same region
        let v = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        let r = build_mesh(v, vec![vec![0, 1, 2], vec![0, 1, 2]]);
        assert!(matches!(r, Err(MeshError::InconsistentOrientation { .. })));
    }

    #[test]
    fn rejects_bad_index_and_short_loop() {
        let v = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        assert!(matches!(build_mesh(v.clone(), vec![vec![0, 1, 7]]), Err(MeshError::VertexOutOfRange { .. })));
        assert!(matches!(build_mesh(v, vec![vec![0, 1]]), Err(MeshError::TooFewVertices { .. })));
    }

    #[test]
    fn locate_finds_corner_cells() {
        let m = grid2x2();
        assert_eq!(m.locate(Point::new(0.0, 0.0)), Some(0));
        assert_eq!(m.locate(Point::new(1.0, 1.0)), Some(3));
        assert_eq!(m.locate(Point::new(0.75, 0.25)), Some(1));
        assert_eq!(m.locate(Point::new(2.0, 0.25)), None);
    }
}
