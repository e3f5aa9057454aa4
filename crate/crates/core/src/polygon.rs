//! Predicates and constructions on simple polygons.
//!
//! Polygons are vertex slices in counter-clockwise order without the closing
//! vertex repeated. Convex inputs (`convex_*`) must additionally be convex
//! with positive area; collinear vertices are tolerated everywhere.

use alloc::vec::Vec;

use crate::point::{orient, Point};

/// Relative tolerance used by the geometric predicates.
pub const REL_TOL: f64 = 1e-10;

/// Edge `i` of `poly` as a pair of endpoints.
pub fn edge(poly: &[Point], i: usize) -> (Point, Point) {
    (poly[i], poly[(i + 1) % poly.len()])
}

pub fn signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| poly[i].cross(poly[(i + 1) % n]))
        .sum::<f64>()
        * 0.5
}

pub fn perimeter(poly: &[Point]) -> f64 {
    (0..poly.len())
        .map(|i| {
            let (a, b) = edge(poly, i);
            a.dist(b)
        })
        .sum()
}

/// Area centroid. Falls back to the vertex average for degenerate polygons.
pub fn centroid(poly: &[Point]) -> Point {
    let n = poly.len();
    let a = signed_area(poly);
    if a.abs() <= f64::MIN_POSITIVE {
        let s = poly.iter().fold(Point::default(), |acc, &p| acc + p);
        return s * (1.0 / n as f64);
    }
    let mut cx = 0.0;
    let mut cy = 0.0;
    // Shift to the first vertex to limit cancellation on small far-away cells.
    let o = poly[0];
    for i in 0..n {
        let p = poly[i] - o;
        let q = poly[(i + 1) % n] - o;
        let w = p.cross(q);
        cx += (p.x + q.x) * w;
        cy += (p.y + q.y) * w;
    }
    o + Point::new(cx, cy) * (1.0 / (6.0 * a))
}

/// Largest vertex-to-vertex distance.
pub fn diameter(points: &[Point]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, &p) in points.iter().enumerate() {
        for &q in &points[i + 1..] {
            d = d.max(p.dist(q));
        }
    }
    d
}

pub fn bbox(points: &[Point]) -> (Point, Point) {
    let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    (lo, hi)
}

/// Distance from `p` to the closed segment `[a, b]`.
pub fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = b - a;
    let len2 = d.dot(d);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(d) / len2).clamp(0.0, 1.0);
    p.dist(a + d * t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Location {
    Inside,
    Boundary,
    Outside,
}

/// Point location with a boundary band of width `tol`.
pub fn locate(poly: &[Point], p: Point, tol: f64) -> Location {
    let n = poly.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = edge(poly, i);
        if segment_distance(p, a, b) <= tol {
            return Location::Boundary;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    if inside {
        Location::Inside
    } else {
        Location::Outside
    }
}

/// Smallest signed distance from `p` to the edge lines of a convex polygon;
/// positive inside.
pub fn convex_depth(convex: &[Point], p: Point) -> f64 {
    let mut depth = f64::INFINITY;
    for i in 0..convex.len() {
        let (a, b) = edge(convex, i);
        let len = a.dist(b);
        if len == 0.0 {
            continue;
        }
        depth = depth.min((b - a).cross(p - a) / len);
    }
    depth
}

/// Distance from `p` to a convex polygon (zero inside).
pub fn convex_distance(convex: &[Point], p: Point) -> f64 {
    if convex_depth(convex, p) >= 0.0 {
        return 0.0;
    }
    (0..convex.len())
        .map(|i| {
            let (a, b) = edge(convex, i);
            segment_distance(p, a, b)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Clips the segment `[p0, p1]` against a closed convex polygon
/// (Cyrus–Beck). Returns the surviving sub-segment.
pub fn clip_segment_convex(p0: Point, p1: Point, convex: &[Point], tol: f64) -> Option<(Point, Point)> {
    let d = p1 - p0;
    let (mut t0, mut t1) = (0.0_f64, 1.0_f64);
    for i in 0..convex.len() {
        let (a, b) = edge(convex, i);
        let e = b - a;
        let len = e.norm();
        if len == 0.0 {
            continue;
        }
        // Inward unit normal of a counter-clockwise edge.
        let nrm = e.perp() * (1.0 / len);
        let num = nrm.dot(p0 - a) + tol;
        let den = nrm.dot(d);
        if den.abs() <= f64::EPSILON * d.norm().max(f64::MIN_POSITIVE) {
            if num < 0.0 {
                return None;
            }
            continue;
        }
        let t = -num / den;
        if den > 0.0 {
            t0 = t0.max(t);
        } else {
            t1 = t1.min(t);
        }
        if t0 > t1 {
            return None;
        }
    }
    Some((p0 + d * t0, p0 + d * t1))
}

/// Whether the closed convex polygon `convex` lies inside the closed simple
/// polygon `poly`.
///
/// The boundary of `poly` must not enter the interior of `convex`; once that
/// holds, the interior of `convex` is entirely on one side and a single
/// interior point decides.
pub fn convex_in_polygon(convex: &[Point], poly: &[Point], tol: f64) -> bool {
    for i in 0..poly.len() {
        let (a, b) = edge(poly, i);
        if let Some((q0, q1)) = clip_segment_convex(a, b, convex, tol) {
            if q0.dist(q1) > tol && convex_depth(convex, q0.midpoint(q1)) > tol {
                return false;
            }
        }
    }
    let g = convex.iter().fold(Point::default(), |acc, &p| acc + p) * (1.0 / convex.len() as f64);
    locate(poly, g, tol) != Location::Outside
}

/// Keeps the part of `poly` where `normal · p >= offset` (Sutherland–Hodgman).
/// The output may contain degenerate slivers for non-convex input, which is
/// harmless for extent queries.
pub fn clip_halfplane(poly: &[Point], normal: Point, offset: f64) -> Vec<Point> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 2);
    for i in 0..n {
        let (a, b) = edge(poly, i);
        let da = normal.dot(a) - offset;
        let db = normal.dot(b) - offset;
        if da >= 0.0 {
            out.push(a);
        }
        if (da >= 0.0) != (db >= 0.0) {
            let t = da / (da - db);
            out.push(a.lerp(b, t));
        }
    }
    out
}

/// Convex hull (Andrew's monotone chain), counter-clockwise, collinear
/// points dropped.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    let push = |hull: &mut Vec<Point>, p: Point, floor: usize| {
        while hull.len() >= floor && orient(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    };
    for &p in &pts {
        push(&mut hull, p, 2);
    }
    // The upper chain must not pop into the lower one.
    let floor = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        push(&mut hull, p, floor);
    }
    hull.pop();
    hull
}

/// Whether two closed convex polygons intersect (touching counts).
/// Separating-axis test over the edge normals of both.
pub fn convex_intersect(a: &[Point], b: &[Point], tol: f64) -> bool {
    fn separated(axes_from: &[Point], a: &[Point], b: &[Point], tol: f64) -> bool {
        for i in 0..axes_from.len() {
            let (p, q) = edge(axes_from, i);
            let e = q - p;
            let len = e.norm();
            if len == 0.0 {
                continue;
            }
            let axis = e.perp() * (1.0 / len);
            let (amin, amax) = project(a, axis);
            let (bmin, bmax) = project(b, axis);
            if amax < bmin - tol || bmax < amin - tol {
                return true;
            }
        }
        false
    }
    fn project(poly: &[Point], axis: Point) -> (f64, f64) {
        poly.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            let s = axis.dot(*p);
            (lo.min(s), hi.max(s))
        })
    }
    !(separated(a, a, b, tol) || separated(b, a, b, tol))
}

fn segments_touch(a: Point, b: Point, c: Point, d: Point, tol: f64) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    segment_distance(a, c, d) <= tol
        || segment_distance(b, c, d) <= tol
        || segment_distance(c, a, b) <= tol
        || segment_distance(d, a, b) <= tol
}

/// Whether the polygon boundary is a simple closed curve: non-adjacent edges
/// never touch and adjacent edges do not fold back onto each other.
pub fn is_simple(poly: &[Point]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    let tol = REL_TOL * diameter(poly);
    for i in 0..n {
        let (a, b) = edge(poly, i);
        // Adjacent edge folding back: the next edge turns by 180 degrees.
        let c = poly[(i + 2) % n];
        if orient(a, b, c).abs() <= tol * a.dist(b) && (b - a).dot(c - b) < 0.0 {
            return false;
        }
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (c, d) = edge(poly, j);
            if segments_touch(a, b, c, d, tol) {
                return false;
            }
        }
    }
    true
}

/// Triangulates a simple counter-clockwise polygon: a fan from the area
/// centroid when the polygon is star-shaped with respect to it, ear clipping
/// otherwise.
pub fn triangulate(poly: &[Point]) -> Vec<[Point; 3]> {
    let c = centroid(poly);
    let n = poly.len();
    let d = diameter(poly);
    let tol = REL_TOL * d * d;
    let fan: Vec<[Point; 3]> = (0..n)
        .map(|i| {
            let (a, b) = edge(poly, i);
            [c, a, b]
        })
        .collect();
    // Collinear vertices give zero-area fan triangles, which are fine.
    if fan.iter().all(|t| orient(t[0], t[1], t[2]) >= -tol) && fan.iter().any(|t| orient(t[0], t[1], t[2]) > tol) {
        return fan;
    }
    ear_clip(poly)
}

/// Ear-clipping triangulation of a simple counter-clockwise polygon.
pub fn ear_clip(poly: &[Point]) -> Vec<[Point; 3]> {
    let mut idx: Vec<usize> = (0..poly.len()).collect();
    let mut tris = Vec::with_capacity(poly.len().saturating_sub(2));
    let tol = REL_TOL * diameter(poly);
    while idx.len() > 3 {
        let m = idx.len();
        let mut clipped = false;
        for k in 0..m {
            let (ia, ib, ic) = (idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]);
            let (a, b, c) = (poly[ia], poly[ib], poly[ic]);
            let o = orient(a, b, c);
            if o.abs() <= tol * a.dist(c) {
                // Collinear vertex: drop it without emitting a triangle.
                idx.remove(k);
                clipped = true;
                break;
            }
            if o < 0.0 {
                continue;
            }
            let tri = [a, b, c];
            let blocked = idx.iter().any(|&j| {
                if j == ia || j == ib || j == ic {
                    return false;
                }
                let p = poly[j];
                convex_depth(&tri, p) >= -tol && !(p == a || p == c)
            });
            if !blocked {
                tris.push(tri);
                idx.remove(k);
                clipped = true;
                break;
            }
        }
        if !clipped {
            // Numerically stuck; emit a fan over the remainder.
            for k in 1..idx.len() - 1 {
                tris.push([poly[idx[0]], poly[idx[k]], poly[idx[k + 1]]]);
            }
            return tris;
        }
    }
    if idx.len() == 3 {
        tris.push([poly[idx[0]], poly[idx[1]], poly[idx[2]]]);
    }
    tris
}
