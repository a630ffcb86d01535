//! Planar geometry: points, polygon properties, interface frames.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance used for geometric degeneracy checks. The absolute
/// tolerance for a given entity is this factor times its bounding-box
/// diagonal.
pub const TOL_GEOM_REL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("degenerate polygon: |area| = {area:.3e} below tolerance {tol:.3e}")]
    DegeneratePolygon { area: f64, tol: f64 },
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon is self-intersecting")]
    SelfIntersecting,
    #[error("interface endpoints coincide")]
    ZeroLengthInterface,
}

/// 2D point / vector, serialized as a `[x, y]` pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Vec2 {
    fn from(a: [f64; 2]) -> Self {
        Vec2 { x: a[0], y: a[1] }
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// Counter-clockwise 90° rotation.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

/// Bounding-box diagonal of a point set; zero for an empty set.
pub fn bbox_diagonal(points: &[Vec2]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        xmin = xmin.min(p.x);
        xmax = xmax.max(p.x);
        ymin = ymin.min(p.y);
        ymax = ymax.max(p.y);
    }
    ((xmax - xmin).powi(2) + (ymax - ymin).powi(2)).sqrt()
}

/// Signed shoelace area; positive for counter-clockwise vertex order.
pub fn signed_area(vertices: &[Vec2]) -> f64 {
    let n = vertices.len();
    let mut a = 0.0;
    for i in 0..n {
        let p = vertices[i];
        let q = vertices[(i + 1) % n];
        a += p.x * q.y - q.x * p.y;
    }
    0.5 * a
}

/// Area and centroid of a simple polygon. The vertex order may be either
/// orientation; the returned area is always positive.
///
/// Errors with `DegeneratePolygon` when the area is below the geometric
/// tolerance (e.g. collinear vertices) and `SelfIntersecting` when two
/// non-adjacent edges cross.
pub fn polygon_properties(vertices: &[Vec2]) -> Result<(f64, Vec2), GeometryError> {
    if vertices.len() < 3 {
        return Err(GeometryError::TooFewVertices(vertices.len()));
    }
    let tol = TOL_GEOM_REL * bbox_diagonal(vertices).max(f64::MIN_POSITIVE);
    let a = signed_area(vertices);
    if a.abs() < tol * bbox_diagonal(vertices).max(1.0) {
        return Err(GeometryError::DegeneratePolygon {
            area: a.abs(),
            tol: tol * bbox_diagonal(vertices).max(1.0),
        });
    }
    if is_self_intersecting(vertices, tol) {
        return Err(GeometryError::SelfIntersecting);
    }
    let n = vertices.len();
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let p = vertices[i];
        let q = vertices[(i + 1) % n];
        let w = p.x * q.y - q.x * p.y;
        cx += (p.x + q.x) * w;
        cy += (p.y + q.y) * w;
    }
    let c = Vec2::new(cx / (6.0 * a), cy / (6.0 * a));
    Ok((a.abs(), c))
}

fn is_self_intersecting(vertices: &[Vec2], tol: f64) -> bool {
    let n = vertices.len();
    for i in 0..n {
        let (a1, a2) = (vertices[i], vertices[(i + 1) % n]);
        for j in (i + 1)..n {
            // Skip adjacent edges (they share a vertex).
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            let (b1, b2) = (vertices[j], vertices[(j + 1) % n]);
            if segments_cross(a1, a2, b1, b2, tol) {
                return true;
            }
        }
    }
    false
}

fn segments_cross(a1: Vec2, a2: Vec2, b1: Vec2, b2: Vec2, tol: f64) -> bool {
    let d1 = cross(a2 - a1, b1 - a1);
    let d2 = cross(a2 - a1, b2 - a1);
    let d3 = cross(b2 - b1, a1 - b1);
    let d4 = cross(b2 - b1, a2 - b1);
    d1 * d2 < -tol * tol && d3 * d4 < -tol * tol
}

pub fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Local frame of a rectilinear interface segment: unit tangent `t` from `p1`
/// to `p2`, unit normal `n` = `t` rotated +90° (counter-clockwise), midpoint
/// and half-length `rho`.
pub fn segment_frame(p1: Vec2, p2: Vec2) -> Result<(Vec2, Vec2, Vec2, f64), GeometryError> {
    let d = p2 - p1;
    let len = d.norm();
    let tol = TOL_GEOM_REL * bbox_diagonal(&[p1, p2]).max(f64::MIN_POSITIVE);
    if len <= tol || len == 0.0 {
        return Err(GeometryError::ZeroLengthInterface);
    }
    let t = d.scale(1.0 / len);
    let n = t.perp();
    let center = Vec2::new(0.5 * (p1.x + p2.x), 0.5 * (p1.y + p2.y));
    Ok((t, n, center, 0.5 * len))
}

/// Distance from point `p` to segment `a`-`b`.
pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let s = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab.scale(s))).norm()
}

/// True when `p` lies on the boundary of the polygon within `tol`.
pub fn point_on_boundary(p: Vec2, vertices: &[Vec2], tol: f64) -> bool {
    let n = vertices.len();
    (0..n).any(|i| point_segment_distance(p, vertices[i], vertices[(i + 1) % n]) <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unit_square_properties() {
        let square = [
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ];
        let (area, c) = polygon_properties(&square).unwrap();
        assert_relative_eq!(area, 1.0);
        assert_relative_eq!(c.x, 0.5);
        assert_relative_eq!(c.y, 0.5);
    }

    #[test]
    fn triangle_centroid() {
        let tri = [Vec2::new(0.0, 0.0), Vec2::new(2.0, 0.0), Vec2::new(0.0, 2.0)];
        let (area, c) = polygon_properties(&tri).unwrap();
        assert_relative_eq!(area, 2.0);
        assert_relative_eq!(c.x, 2.0 / 3.0);
        assert_relative_eq!(c.y, 2.0 / 3.0);
    }

    #[test]
    fn collinear_points_are_degenerate() {
        let line = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0)];
        assert!(matches!(
            polygon_properties(&line),
            Err(GeometryError::DegeneratePolygon { .. })
        ));
    }

    #[test]
    fn clockwise_polygon_reports_positive_area() {
        let square_cw = [
            Vec2::new(0.0, 0.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(1.0, 0.0),
        ];
        assert!(signed_area(&square_cw) < 0.0);
        let (area, c) = polygon_properties(&square_cw).unwrap();
        assert_relative_eq!(area, 1.0);
        assert_relative_eq!(c.x, 0.5);
        assert_relative_eq!(c.y, 0.5);
    }

    #[test]
    fn crossed_quad_is_self_intersecting() {
        // Nonzero area, but two edges cross.
        let crossed = [
            Vec2::new(0.0, 0.0),
            Vec2::new(4.0, 0.0),
            Vec2::new(1.0, 2.0),
            Vec2::new(3.0, 2.0),
        ];
        assert_eq!(polygon_properties(&crossed), Err(GeometryError::SelfIntersecting));
    }

    #[test]
    fn horizontal_frame() {
        let (t, n, c, rho) = segment_frame(Vec2::new(0.0, 0.0), Vec2::new(2.0, 0.0)).unwrap();
        assert_relative_eq!(t.x, 1.0);
        assert_relative_eq!(t.y, 0.0);
        assert_relative_eq!(n.x, 0.0);
        assert_relative_eq!(n.y, 1.0);
        assert_relative_eq!(c.x, 1.0);
        assert_relative_eq!(c.y, 0.0);
        assert_relative_eq!(rho, 1.0);
    }

    #[test]
    fn vertical_frame_points_left() {
        let (t, n, c, rho) = segment_frame(Vec2::new(0.0, 0.0), Vec2::new(0.0, 2.0)).unwrap();
        assert_relative_eq!(t.x, 0.0);
        assert_relative_eq!(t.y, 1.0);
        assert_relative_eq!(n.x, -1.0);
        assert_relative_eq!(n.y, 0.0);
        assert_relative_eq!(c.y, 1.0);
        assert_relative_eq!(rho, 1.0);
    }

    #[test]
    fn coincident_endpoints_error() {
        let p = Vec2::new(0.3, 0.7);
        assert_eq!(segment_frame(p, p), Err(GeometryError::ZeroLengthInterface));
    }
}
