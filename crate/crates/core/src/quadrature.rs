//! Edge and area quadrature.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::point::{orient, Point};
use crate::polygon;

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule, exact for polynomials of degree `2n - 1`. Nodes are
    /// the Legendre roots found by Newton iteration from the Chebyshev-like
    /// initial guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one point");
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = libm::cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            nodes.push(-x);
            weights.push(2.0 / ((1.0 - x * x) * dp * dp));
        }
        Self { nodes, weights }
    }

    /// Integral of `f` over the segment `[a, b]` (arc-length measure).
    pub fn integrate_segment(&self, a: Point, b: Point, mut f: impl FnMut(Point) -> f64) -> f64 {
        let half = 0.5 * a.dist(b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(a.lerp(b, 0.5 * (t + 1.0))))
            .sum::<f64>()
            * half
    }

    /// Average of `f` over the segment `[a, b]`.
    pub fn average_segment(&self, a: Point, b: Point, mut f: impl FnMut(Point) -> f64) -> f64 {
        0.5 * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(a.lerp(b, 0.5 * (t + 1.0))))
            .sum::<f64>()
    }
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Symmetric 6-point Dunavant rule, exact for degree 4. Barycentric
/// coordinates and weights normalised to sum to one.
const DUNAVANT4: [([f64; 3], f64); 6] = {
    const A1: f64 = 0.445_948_490_915_965;
    const B1: f64 = 0.108_103_018_168_070;
    const W1: f64 = 0.223_381_589_678_011;
    const A2: f64 = 0.091_576_213_509_771;
    const B2: f64 = 0.816_847_572_980_459;
    const W2: f64 = 0.109_951_743_655_322;
    [
        ([B1, A1, A1], W1),
        ([A1, B1, A1], W1),
        ([A1, A1, B1], W1),
        ([B2, A2, A2], W2),
        ([A2, B2, A2], W2),
        ([A2, A2, B2], W2),
    ]
};

/// Degree-4 quadrature of `f` over the triangle `t` (signed by orientation).
pub fn integrate_triangle(t: &[Point; 3], mut f: impl FnMut(Point) -> f64) -> f64 {
    let area = 0.5 * orient(t[0], t[1], t[2]);
    if area == 0.0 {
        return 0.0;
    }
    DUNAVANT4
        .iter()
        .map(|(l, w)| {
            let p = Point::new(
                l[0] * t[0].x + l[1] * t[1].x + l[2] * t[2].x,
                l[0] * t[0].y + l[1] * t[1].y + l[2] * t[2].y,
            );
            w * f(p)
        })
        .sum::<f64>()
        * area
}

/// Integral of `f` over a simple counter-clockwise polygon using the
/// centroid fan (ear clipping when the polygon is not star-shaped with
/// respect to its centroid) and the degree-4 triangle rule.
pub fn integrate_polygon(poly: &[Point], mut f: impl FnMut(Point) -> f64) -> f64 {
    polygon::triangulate(poly)
        .iter()
        .map(|t| integrate_triangle(t, &mut f))
        .sum()
}

/// Degree-4 quadrature over `t` split into `m * m` congruent sub-triangles.
pub fn integrate_triangle_refined(t: &[Point; 3], m: usize, mut f: impl FnMut(Point) -> f64) -> f64 {
    if m <= 1 {
        return integrate_triangle(t, f);
    }
    let (o, u, v) = (t[0], (t[1] - t[0]) * (1.0 / m as f64), (t[2] - t[0]) * (1.0 / m as f64));
    let at = |i: usize, j: usize| o + u * i as f64 + v * j as f64;
    let mut sum = 0.0;
    for j in 0..m {
        for i in 0..m - j {
            sum += integrate_triangle(&[at(i, j), at(i + 1, j), at(i, j + 1)], &mut f);
            if i + j + 1 < m {
                sum += integrate_triangle(&[at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)], &mut f);
            }
        }
    }
    sum
}

/// As [`integrate_polygon`], with every triangle refined until its pieces
/// have diameter at most `max_size`.
pub fn integrate_polygon_refined(poly: &[Point], max_size: f64, mut f: impl FnMut(Point) -> f64) -> f64 {
    polygon::triangulate(poly)
        .iter()
        .map(|t| {
            let m = libm::ceil(polygon::diameter(t) / max_size).max(1.0) as usize;
            integrate_triangle_refined(t, m, &mut f)
        })
        .sum()
}
