//! Strictly convex polygons, counterclockwise vertex order.

use alloc::vec::Vec;

use super::{DomainError, Geometry, GeometryError, MEDIAL_AXIS_REL_TOL};
use crate::vecn::{self, Point};

#[allow(unused_imports)]
use crate::math::F64Ext;

#[inline]
fn cross(a: &Point<2>, b: &Point<2>) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Point<2>>,
    /// Edge vectors v[i+1] - v[i], cached together with their lengths.
    edges: Vec<(Point<2>, f64)>,
    diameter: f64,
}

impl ConvexPolygon {
    /// Vertices must be finite, counterclockwise, and strictly convex
    /// (every consecutive cross product positive).
    pub fn new(vertices: Vec<Point<2>>) -> Result<Self, DomainError> {
        let n = vertices.len();
        if n < 3 {
            return Err(DomainError::TooFewVertices);
        }
        if vertices.iter().any(|v| !vecn::is_finite(v)) {
            return Err(DomainError::NotStrictlyConvex);
        }
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            if cross(&vecn::sub(&b, &a), &vecn::sub(&c, &b)) <= 0.0 {
                return Err(DomainError::NotStrictlyConvex);
            }
        }
        let edges = (0..n)
            .map(|i| {
                let e = vecn::sub(&vertices[(i + 1) % n], &vertices[i]);
                let len = vecn::norm(&e);
                (e, len)
            })
            .collect();
        let diameter = calipers_diameter(&vertices);
        Ok(ConvexPolygon {
            vertices,
            edges,
            diameter,
        })
    }

    pub fn vertices(&self) -> &[Point<2>] {
        &self.vertices
    }

    /// Signed distance of `x` to the supporting line of edge i (positive inside).
    fn line_distance(&self, i: usize, x: &Point<2>) -> f64 {
        let (e, len) = self.edges[i];
        cross(&e, &vecn::sub(x, &self.vertices[i])) / len
    }
}

/// Rotating-calipers diameter of a strictly convex CCW polygon.
fn calipers_diameter(v: &[Point<2>]) -> f64 {
    let n = v.len();
    let mut best: f64 = 0.0;
    let mut j = 1;
    for i in 0..n {
        let ni = (i + 1) % n;
        let edge = vecn::sub(&v[ni], &v[i]);
        // Advance j while the next vertex is farther from the edge direction.
        loop {
            let nj = (j + 1) % n;
            if cross(&edge, &vecn::sub(&v[nj], &v[j])) > 0.0 {
                j = nj;
            } else {
                break;
            }
        }
        best = best.max(vecn::dist(&v[i], &v[j]));
        best = best.max(vecn::dist(&v[ni], &v[j]));
    }
    best
}

impl Geometry<2> for ConvexPolygon {
    fn contains(&self, x: &Point<2>) -> bool {
        vecn::is_finite(x) && (0..self.vertices.len()).all(|i| self.line_distance(i, x) > 0.0)
    }

    fn boundary_distance(&self, x: &Point<2>) -> Result<f64, GeometryError> {
        // For a point of the closure of a convex polygon, the nearest boundary
        // point is the perpendicular foot on some edge, so the minimum of the
        // supporting-line distances is exact.
        let mut min = f64::INFINITY;
        for i in 0..self.vertices.len() {
            let d = self.line_distance(i, x);
            if d < -1e-12 * self.diameter {
                return Err(GeometryError::OutsideDomain);
            }
            min = min.min(d);
        }
        Ok(min.max(0.0))
    }

    fn boundary_distance_gradient(&self, x: &Point<2>) -> Result<Point<2>, GeometryError> {
        if !self.contains(x) {
            return Err(GeometryError::OutsideDomain);
        }
        let n = self.vertices.len();
        let mut best = 0;
        let mut dbest = self.line_distance(0, x);
        for i in 1..n {
            let d = self.line_distance(i, x);
            if d < dbest {
                dbest = d;
                best = i;
            }
        }
        let tie_tol = MEDIAL_AXIS_REL_TOL * self.diameter;
        for i in 0..n {
            if i != best && self.line_distance(i, x) - dbest <= tie_tol {
                return Err(GeometryError::MedialAxis);
            }
        }
        let (e, len) = self.edges[best];
        // Inward normal of a CCW edge is the left-hand normal.
        Ok([-e[1] / len, e[0] / len])
    }

    fn diameter(&self) -> f64 {
        self.diameter
    }

    fn bounding_box(&self) -> (Point<2>, Point<2>) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &self.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }
}
