//! Scaled monomials and quadrature on polygons and segments.

use nalgebra::{DMatrix, Vector2};

use crate::error::{Result, VemError};
use crate::mesh::{area_centroid, cross, diameter, Point};

/// Monomials `((x - x_K) / h_K)^α` enumerated by total degree:
/// `1, m_x, m_y, m_x², m_x m_y, m_y², ...`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledMonomialBasis {
    pub center: Point,
    pub scale: f64,
    pub degree: usize,
}

impl ScaledMonomialBasis {
    pub fn new(center: Point, scale: f64, degree: usize) -> Self {
        ScaledMonomialBasis { center, scale, degree }
    }

    /// Basis on a polygon, centred at its centroid and scaled by its diameter.
    pub fn for_polygon(polygon: &[Point], degree: usize) -> Self {
        let (_, c) = area_centroid(polygon);
        ScaledMonomialBasis::new(c, diameter(polygon), degree)
    }

    pub fn dim(&self) -> usize {
        (self.degree + 1) * (self.degree + 2) / 2
    }

    /// Exponent pairs in basis order.
    pub fn exponents(&self) -> Vec<(usize, usize)> {
        (0..=self.degree).flat_map(|d| (0..=d).map(move |j| (d - j, j))).collect()
    }

    pub fn local(&self, p: Point) -> Vector2<f64> {
        (p - self.center) / self.scale
    }

    pub fn eval(&self, p: Point) -> Vec<f64> {
        let s = self.local(p);
        self.exponents().into_iter().map(|(a, b)| s.x.powi(a as i32) * s.y.powi(b as i32)).collect()
    }

    /// Gradients of all basis functions at `p`.
    pub fn gradients(&self, p: Point) -> Vec<Vector2<f64>> {
        let s = self.local(p);
        let pw = |v: f64, e: usize| if e == 0 { 0.0 } else { e as f64 * v.powi(e as i32 - 1) };
        self.exponents()
            .into_iter()
            .map(|(a, b)| {
                Vector2::new(pw(s.x, a) * s.y.powi(b as i32), s.x.powi(a as i32) * pw(s.y, b)) / self.scale
            })
            .collect()
    }
}

/// Points and positive weights of an integration rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    /// Total polynomial degree integrated exactly.
    pub degree: usize,
}

impl Quadrature {
    pub fn integrate<F: FnMut(Point) -> f64>(&self, mut f: F) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&p, &w)| w * f(p)).sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Point, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1], by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "a Gauss rule needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Gauss–Legendre rule on the segment `[a, b]`, exact to `degree`.
pub fn edge_quadrature(a: Point, b: Point, degree: usize) -> Result<Quadrature> {
    let len = (b - a).norm();
    if !(len > 0.0) {
        return Err(VemError::DegenerateGeometry(format!("zero-length segment at ({}, {})", a.x, a.y)));
    }
    let (x, w) = gauss_legendre(degree / 2 + 1);
    let points = x.iter().map(|&s| a + (b - a) * (0.5 * (s + 1.0))).collect();
    let weights = w.iter().map(|&wi| 0.5 * len * wi).collect();
    Ok(Quadrature { points, weights, degree })
}

fn push_triangle(q: &mut Quadrature, a: Point, b: Point, c: Point, rule: &(Vec<f64>, Vec<f64>)) {
    // Collapsed square: (s, t) -> a + s (b - a) + t (1 - s) (c - a), Jacobian 2|T| (1 - s).
    let jac = cross(b - a, c - a);
    let (x, w) = rule;
    for (&xs, &ws) in x.iter().zip(w) {
        let s = 0.5 * (xs + 1.0);
        for (&xt, &wt) in x.iter().zip(w) {
            let t = 0.5 * (xt + 1.0);
            q.points.push(a + (b - a) * s + (c - a) * (t * (1.0 - s)));
            q.weights.push(0.25 * ws * wt * jac * (1.0 - s));
        }
    }
}

/// Triangles of a counter-clockwise simple polygon by ear clipping.
pub fn ear_clip(polygon: &[Point]) -> Result<Vec<[usize; 3]>> {
    let mut idx: Vec<usize> = (0..polygon.len()).collect();
    let mut tris = Vec::with_capacity(polygon.len().saturating_sub(2));
    while idx.len() > 3 {
        let m = idx.len();
        let ear = (0..m).find(|&i| {
            let (ia, ib, ic) = (idx[(i + m - 1) % m], idx[i], idx[(i + 1) % m]);
            let (a, b, c) = (polygon[ia], polygon[ib], polygon[ic]);
            if cross(b - a, c - b) <= 0.0 {
                return false;
            }
            idx.iter().all(|&j| {
                if j == ia || j == ib || j == ic {
                    return true;
                }
                let p = polygon[j];
                !(cross(b - a, p - a) >= 0.0 && cross(c - b, p - b) >= 0.0 && cross(a - c, p - c) >= 0.0)
            })
        });
        let Some(i) = ear else {
            return Err(VemError::DegenerateGeometry("ear clipping found no ear".into()));
        };
        tris.push([idx[(i + m - 1) % m], idx[i], idx[(i + 1) % m]]);
        idx.remove(i);
    }
    if idx.len() == 3 {
        tris.push([idx[0], idx[1], idx[2]]);
    }
    Ok(tris)
}

/// Rule on a counter-clockwise simple polygon, exact for total degree `degree`.
///
/// Fans out from the centroid when every fan triangle is positively oriented,
/// otherwise ear-clips, then applies a collapsed Gauss rule per triangle.
pub fn polygon_quadrature(polygon: &[Point], degree: usize) -> Result<Quadrature> {
    let n = polygon.len();
    if n < 3 {
        return Err(VemError::DegenerateGeometry(format!("polygon with {n} vertices")));
    }
    let (area, c) = area_centroid(polygon);
    if !(area > 0.0) {
        return Err(VemError::DegenerateGeometry("polygon has non-positive area".into()));
    }
    let rule = gauss_legendre((degree + 2).div_ceil(2));
    let mut q = Quadrature { points: Vec::new(), weights: Vec::new(), degree };
    let star = (0..n).all(|i| cross(polygon[(i + 1) % n] - polygon[i], c - polygon[i]) > 0.0);
    if n == 3 {
        push_triangle(&mut q, polygon[0], polygon[1], polygon[2], &rule);
    } else if star {
        for i in 0..n {
            push_triangle(&mut q, c, polygon[i], polygon[(i + 1) % n], &rule);
        }
    } else {
        for [a, b, d] in ear_clip(polygon)? {
            push_triangle(&mut q, polygon[a], polygon[b], polygon[d], &rule);
        }
    }
    Ok(q)
}

/// Gram matrix `∫_K m_α m_β` of the scaled monomials up to `k_max`.
pub fn monomial_gram(polygon: &[Point], k_max: usize) -> Result<DMatrix<f64>> {
    let basis = ScaledMonomialBasis::for_polygon(polygon, k_max);
    let quad = polygon_quadrature(polygon, 2 * k_max)?;
    let dim = basis.dim();
    let mut g = DMatrix::zeros(dim, dim);
    for (p, w) in quad.iter() {
        let m = basis.eval(p);
        for i in 0..dim {
            for j in 0..dim {
                g[(i, j)] += w * m[i] * m[j];
            }
        }
    }
    if g.clone().cholesky().is_none() {
        return Err(VemError::DegenerateGeometry("monomial Gram matrix is not positive definite".into()));
    }
    Ok(g)
}
