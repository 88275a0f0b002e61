use super::{cross, PolyMesh};

/// Measured shape-regularity quantities of a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    /// min over cells K and edges e of K of |e| / h_K.
    pub min_edge_ratio: f64,
    /// Whether each cell is star-shaped with respect to its centroid.
    pub star_shaped_wrt_centroid: Vec<bool>,
    /// min over cells of h_K / h.
    pub quasi_uniformity: f64,
    pub n_edges_max: usize,
}

impl QualityReport {
    pub fn all_star_shaped(&self) -> bool {
        self.star_shaped_wrt_centroid.iter().all(|&s| s)
    }
}

/// A cell is star-shaped with respect to its centroid when the centroid lies
/// strictly on the inner side of every edge.
pub(crate) fn star_shaped_wrt_centroid(mesh: &PolyMesh, k: usize) -> bool {
    let pts = mesh.polygon(k);
    let c = mesh.geometry(k).centroid;
    let n = pts.len();
    (0..n).all(|i| cross(pts[(i + 1) % n] - pts[i], c - pts[i]) > 0.0)
}

pub fn quality(mesh: &PolyMesh) -> QualityReport {
    let mut min_edge_ratio = f64::INFINITY;
    let mut quasi_uniformity = f64::INFINITY;
    let mut n_edges_max = 0;
    let mut star = Vec::with_capacity(mesh.num_cells());
    for k in 0..mesh.num_cells() {
        let hk = mesh.geometry(k).diameter;
        for ce in mesh.cell_edges(k) {
            min_edge_ratio = min_edge_ratio.min(mesh.edges()[ce.edge].length / hk);
        }
        quasi_uniformity = quasi_uniformity.min(hk / mesh.h());
        n_edges_max = n_edges_max.max(mesh.cell_edges(k).len());
        star.push(star_shaped_wrt_centroid(mesh, k));
    }
    QualityReport { min_edge_ratio, star_shaped_wrt_centroid: star, quasi_uniformity, n_edges_max }
}
