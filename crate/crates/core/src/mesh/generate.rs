use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use super::{build_mesh, voronoi, Point, PolyMesh};
use crate::error::{Result, VemError};

/// The five mesh families used by the convergence studies, all on the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeshFamily {
    /// `n x n` squares, each cut into two right triangles along its rising diagonal.
    Triangular,
    Square,
    /// `n x n` squares, each cut into two congruent non-convex hexagons by a zig-zag.
    Concave,
    /// Jittered lattice seeds relaxed by three Lloyd iterations.
    VoronoiStructured,
    /// Uniform random seeds relaxed by one Lloyd iteration.
    VoronoiRandom,
}

impl MeshFamily {
    pub const ALL: [MeshFamily; 5] = [
        MeshFamily::Triangular,
        MeshFamily::Square,
        MeshFamily::Concave,
        MeshFamily::VoronoiStructured,
        MeshFamily::VoronoiRandom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MeshFamily::Triangular => "triangular",
            MeshFamily::Square => "square",
            MeshFamily::Concave => "concave",
            MeshFamily::VoronoiStructured => "voronoi_structured",
            MeshFamily::VoronoiRandom => "voronoi_random",
        }
    }

    /// Whether `h` halves exactly when `n` doubles.
    pub fn is_uniform(self) -> bool {
        matches!(self, MeshFamily::Triangular | MeshFamily::Square | MeshFamily::Concave)
    }
}

impl fmt::Display for MeshFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MeshFamily {
    type Err = VemError;

    fn from_str(s: &str) -> Result<Self> {
        MeshFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| VemError::UnknownFamily(s.to_string()))
    }
}

/// Generates a mesh of the unit square with `n` subdivisions per side.
///
/// Voronoi families use `n * n` seeds drawn from `seed`; the other families
/// ignore it. Output is deterministic for fixed arguments.
pub fn generate(family: MeshFamily, n: usize, seed: u64) -> Result<PolyMesh> {
    if n == 0 {
        return Err(VemError::InvalidArgument("subdivision count n must be at least 1".into()));
    }
    match family {
        MeshFamily::Square => Ok(square(n)),
        MeshFamily::Triangular => Ok(triangular(n)),
        MeshFamily::Concave => Ok(concave(n)),
        MeshFamily::VoronoiStructured => voronoi::structured(n, seed),
        MeshFamily::VoronoiRandom => voronoi::random(n, seed),
    }
}

fn lattice(n: usize) -> Vec<Point> {
    let mut v = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            v.push(Point::new(i as f64 / n as f64, j as f64 / n as f64));
        }
    }
    v
}

fn square(n: usize) -> PolyMesh {
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut cells = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            cells.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    build_mesh(lattice(n), cells).expect("square lattice is valid")
}

fn triangular(n: usize) -> PolyMesh {
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            cells.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            cells.push(vec![id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    build_mesh(lattice(n), cells).expect("triangulated lattice is valid")
}

fn concave(n: usize) -> PolyMesh {
    // Vertices live on a (3n+1) x (4n+1) sub-lattice: x in thirds, y in quarters of a cell.
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut vertex = |a: usize, b: usize| -> usize {
        *index.entry((a, b)).or_insert_with(|| {
            vertices.push(Point::new(a as f64 / (3 * n) as f64, b as f64 / (4 * n) as f64));
            vertices.len() - 1
        })
    };
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (x, y) = (3 * i, 4 * j);
            // zig-zag (0, 1/2) -> (1/3, 3/4) -> (2/3, 1/4) -> (1, 1/2)
            let lower = [(0, 0), (3, 0), (3, 2), (2, 1), (1, 3), (0, 2)];
            let upper = [(0, 2), (1, 3), (2, 1), (3, 2), (3, 4), (0, 4)];
            cells.push(lower.iter().map(|&(a, b)| vertex(x + a, y + b)).collect());
            cells.push(upper.iter().map(|&(a, b)| vertex(x + a, y + b)).collect());
        }
    }
    build_mesh(vertices, cells).expect("concave tiling is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_four() {
        let m = generate(MeshFamily::Square, 4, 0).unwrap();
        assert_eq!(m.num_cells(), 16);
        assert!((m.h() - 0.353553).abs() < 5e-7);
        assert!((m.h() - 2f64.sqrt() / 4.0).abs() < 1e-15);
    }

    #[test]
    fn triangular_two() {
        let m = generate(MeshFamily::Triangular, 2, 0).unwrap();
        assert_eq!(m.num_cells(), 8);
        assert!(m.cells().iter().all(|c| c.len() == 3));
        assert!((m.h() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn concave_cells_are_nonconvex_hexagons() {
        let m = generate(MeshFamily::Concave, 3, 0).unwrap();
        assert_eq!(m.num_cells(), 18);
        assert!((m.area() - 1.0).abs() < 1e-14);
        for k in 0..m.num_cells() {
            let p = m.polygon(k);
            assert_eq!(p.len(), 6);
            let reflex = (0..6).any(|i| {
                let (a, b, c) = (p[(i + 5) % 6], p[i], p[(i + 1) % 6]);
                super::super::cross(b - a, c - b) < 0.0
            });
            assert!(reflex, "cell {k} should be non-convex");
            assert!((m.geometry(k).area - 0.5 / 9.0).abs() < 1e-15);
        }
        assert!((m.h() - 5f64.sqrt() / 6.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_families_halve_h() {
        for family in [MeshFamily::Triangular, MeshFamily::Square, MeshFamily::Concave] {
            for m in [1, 2, 3, 5, 8] {
                let coarse = generate(family, m, 0).unwrap().h();
                let fine = generate(family, 2 * m, 0).unwrap().h();
                assert!((fine - coarse / 2.0).abs() <= 1e-15 * coarse, "{family} m={m}");
            }
        }
    }

    #[test]
    fn rejects_zero_and_unknown() {
        assert!(generate(MeshFamily::Square, 0, 0).is_err());
        assert!(matches!("hexagonal".parse::<MeshFamily>(), Err(VemError::UnknownFamily(_))));
        for f in MeshFamily::ALL {
            assert_eq!(f.name().parse::<MeshFamily>().unwrap(), f);
        }
    }
}
