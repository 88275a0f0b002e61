//! Voronoi tessellations of the unit square.
//!
//! Cells are built one seed at a time by clipping the square with bisector
//! half-planes of nearby seeds, found through a bucket grid. Shared vertices
//! are then merged and edges much shorter than the seed spacing collapsed so
//! that near-degenerate Voronoi vertices do not leave slivers.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{area_centroid, build_mesh, Point, PolyMesh};
use crate::error::Result;

const STRUCTURED_JITTER: f64 = 0.25;
const STRUCTURED_LLOYD: usize = 3;
const RANDOM_LLOYD: usize = 1;
/// Edges shorter than this fraction of the seed spacing are collapsed.
const COLLAPSE_FRACTION: f64 = 0.05;
const MERGE_TOL: f64 = 1e-10;

pub(super) fn structured(n: usize, seed: u64) -> Result<PolyMesh> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1.0 / n as f64;
    let mut seeds = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let dx: f64 = rng.random_range(-STRUCTURED_JITTER..STRUCTURED_JITTER);
            let dy: f64 = rng.random_range(-STRUCTURED_JITTER..STRUCTURED_JITTER);
            seeds.push(Point::new((i as f64 + 0.5 + dx) * h, (j as f64 + 0.5 + dy) * h));
        }
    }
    tessellate(seeds, STRUCTURED_LLOYD, h)
}

pub(super) fn random(n: usize, seed: u64) -> Result<PolyMesh> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seeds = (0..n * n)
        .map(|_| {
            let x: f64 = rng.random_range(0.0..1.0);
            let y: f64 = rng.random_range(0.0..1.0);
            Point::new(x, y)
        })
        .collect();
    tessellate(seeds, RANDOM_LLOYD, 1.0 / n as f64)
}

fn tessellate(mut seeds: Vec<Point>, lloyd_iterations: usize, spacing: f64) -> Result<PolyMesh> {
    let mut cells = voronoi_cells(&seeds);
    for _ in 0..lloyd_iterations {
        seeds = cells.iter().map(|c| area_centroid(c).1).collect();
        cells = voronoi_cells(&seeds);
    }
    match assemble(&cells, COLLAPSE_FRACTION * spacing) {
        Ok(mesh) => Ok(mesh),
        Err(e) => {
            log::warn!("short-edge collapse produced an invalid mesh ({e}); keeping raw Voronoi cells");
            Ok(assemble(&cells, 0.0)?)
        }
    }
}

struct Buckets {
    n: usize,
    items: Vec<Vec<usize>>,
}

impl Buckets {
    fn new(points: &[Point]) -> Self {
        let n = ((points.len() as f64).sqrt().ceil() as usize).max(1);
        let mut items = vec![Vec::new(); n * n];
        for (i, p) in points.iter().enumerate() {
            let (bx, by) = Self::bucket(n, *p);
            items[by * n + bx].push(i);
        }
        Buckets { n, items }
    }

    fn bucket(n: usize, p: Point) -> (usize, usize) {
        let f = |v: f64| ((v * n as f64).floor().max(0.0) as usize).min(n - 1);
        (f(p.x), f(p.y))
    }

    /// Seeds in the square ring of buckets at Chebyshev distance `r` around `(bx, by)`.
    fn ring(&self, bx: usize, by: usize, r: usize) -> impl Iterator<Item = usize> + '_ {
        let n = self.n as isize;
        let (bx, by, r) = (bx as isize, by as isize, r as isize);
        (by - r..=by + r)
            .flat_map(move |y| (bx - r..=bx + r).map(move |x| (x, y)))
            .filter(move |&(x, y)| {
                (x - bx).abs().max((y - by).abs()) == r && x >= 0 && y >= 0 && x < n && y < n
            })
            .flat_map(move |(x, y)| self.items[(y * n + x) as usize].iter().copied())
    }
}

/// Keeps the part of a convex CCW polygon where `(x - m) . d <= 0`.
fn clip(poly: &[Point], m: Point, d: nalgebra::Vector2<f64>) -> Vec<Point> {
    let side = |p: Point| (p - m).dot(&d);
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        let (sa, sb) = (side(a), side(b));
        if sa <= 0.0 {
            out.push(a);
        }
        if (sa < 0.0 && sb > 0.0) || (sa > 0.0 && sb < 0.0) {
            let t = sa / (sa - sb);
            out.push(a + (b - a) * t);
        }
    }
    out
}

fn voronoi_cells(seeds: &[Point]) -> Vec<Vec<Point>> {
    let buckets = Buckets::new(seeds);
    let width = 1.0 / buckets.n as f64;
    seeds
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let mut poly = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)];
            let (bx, by) = Buckets::bucket(buckets.n, s);
            for r in 0..=buckets.n {
                // everything closer than r * width has been applied
                let radius = poly.iter().map(|p| (p - s).norm()).fold(0.0, f64::max);
                if r > 0 && (r - 1) as f64 * width > 2.0 * radius {
                    break;
                }
                for j in buckets.ring(bx, by, r) {
                    if j != i {
                        let o = seeds[j];
                        poly = clip(&poly, Point::from((s.coords + o.coords) * 0.5), o - s);
                    }
                }
            }
            poly
        })
        .collect()
}

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Interior,
    /// On one side of the square: 0 bottom, 1 right, 2 top, 3 left.
    Side(u8),
    Corner,
}

fn kind(p: Point) -> Kind {
    let tol = 1e-9;
    let sides = [p.y.abs() < tol, (p.x - 1.0).abs() < tol, (p.y - 1.0).abs() < tol, p.x.abs() < tol];
    match sides.iter().filter(|&&s| s).count() {
        0 => Kind::Interior,
        1 => Kind::Side(sides.iter().position(|&s| s).unwrap() as u8),
        _ => Kind::Corner,
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

fn assemble(cells: &[Vec<Point>], collapse: f64) -> Result<PolyMesh> {
    // merge coincident vertices through a hash on a fine grid
    let mut points: Vec<Point> = Vec::new();
    let mut grid: std::collections::HashMap<(i64, i64), Vec<usize>> = std::collections::HashMap::new();
    let key = |p: Point| ((p.x / MERGE_TOL / 10.0).round() as i64, (p.y / MERGE_TOL / 10.0).round() as i64);
    let mut loops: Vec<Vec<usize>> = Vec::with_capacity(cells.len());
    for cell in cells {
        let mut lp = Vec::with_capacity(cell.len());
        for &p in cell {
            let (kx, ky) = key(p);
            let mut found = None;
            'search: for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(list) = grid.get(&(kx + dx, ky + dy)) {
                        if let Some(&v) = list.iter().find(|&&v| (points[v] - p).norm() < MERGE_TOL) {
                            found = Some(v);
                            break 'search;
                        }
                    }
                }
            }
            let v = found.unwrap_or_else(|| {
                points.push(p);
                grid.entry((kx, ky)).or_default().push(points.len() - 1);
                points.len() - 1
            });
            if lp.last() != Some(&v) {
                lp.push(v);
            }
        }
        while lp.len() > 1 && lp.first() == lp.last() {
            lp.pop();
        }
        loops.push(lp);
    }

    let mut parent: Vec<usize> = (0..points.len()).collect();
    if collapse > 0.0 {
        for lp in &loops {
            for i in 0..lp.len() {
                let (a, b) = (lp[i], lp[(i + 1) % lp.len()]);
                if (points[a] - points[b]).norm() < collapse {
                    let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                    if ra != rb {
                        parent[ra.max(rb)] = ra.min(rb);
                    }
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = std::collections::BTreeMap::new();
    for v in 0..points.len() {
        let r = find(&mut parent, v);
        groups.entry(r).or_default().push(v);
    }
    let mut new_index = vec![usize::MAX; points.len()];
    let mut vertices = Vec::with_capacity(groups.len());
    for members in groups.values() {
        let pos = representative(members.iter().map(|&v| points[v]).collect());
        for &v in members {
            new_index[v] = vertices.len();
        }
        vertices.push(pos);
    }
    let mut out_loops = Vec::with_capacity(loops.len());
    for lp in &loops {
        let mut l: Vec<usize> = Vec::with_capacity(lp.len());
        for &v in lp {
            let w = new_index[v];
            if l.last() != Some(&w) {
                l.push(w);
            }
        }
        while l.len() > 1 && l.first() == l.last() {
            l.pop();
        }
        out_loops.push(l);
    }
    Ok(build_mesh(vertices, out_loops)?)
}

fn representative(points: Vec<Point>) -> Point {
    if points.len() == 1 {
        return points[0];
    }
    let kinds: Vec<Kind> = points.iter().map(|&p| kind(p)).collect();
    if let Some(i) = kinds.iter().position(|&k| k == Kind::Corner) {
        return points[i];
    }
    let boundary: Vec<(Point, Kind)> =
        points.iter().zip(&kinds).filter(|(_, k)| matches!(k, Kind::Side(_))).map(|(p, k)| (*p, *k)).collect();
    let pick = if boundary.is_empty() {
        points
    } else if boundary.iter().all(|(_, k)| *k == boundary[0].1) {
        boundary.into_iter().map(|(p, _)| p).collect()
    } else {
        vec![boundary[0].0]
    };
    let sum = pick.iter().fold(nalgebra::Vector2::zeros(), |acc, p| acc + p.coords);
    Point::from(sum / pick.len() as f64)
}
