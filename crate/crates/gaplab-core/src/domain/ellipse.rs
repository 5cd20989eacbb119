//! Ellipse geometry. No closed form exists for the distance to the boundary,
//! so the nearest boundary point is found by damped Newton iteration on the
//! one-parameter Lagrange condition; the simulator queries this in a hot loop.

use super::{DomainError, Geometry, GeometryError, MEDIAL_AXIS_REL_TOL};
use crate::vecn::{self, Point};

#[allow(unused_imports)]
use crate::math::F64Ext;

const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 50;

/// Ellipse x²/a² + y²/b² < 1 with semi-axes a >= b > 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    a: f64,
    b: f64,
}

impl Ellipse {
    pub fn new(a: f64, b: f64) -> Result<Self, DomainError> {
        if !(b > 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(DomainError::NonPositiveLength("ellipse semi-axis"));
        }
        if a < b {
            return Err(DomainError::AxesOutOfOrder);
        }
        Ok(Ellipse { a, b })
    }

    pub fn semi_axes(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    /// (x/a)² + (y/b)², the level of the defining quadratic.
    fn level(&self, x: &Point<2>) -> f64 {
        let u = x[0] / self.a;
        let v = x[1] / self.b;
        u * u + v * v
    }

    /// Half-length of the medial-axis segment on the major axis: points
    /// (t, 0) with |t| < this have two symmetric nearest boundary points.
    fn evolute_reach(&self) -> f64 {
        (self.a * self.a - self.b * self.b) / self.a
    }

    /// Nearest boundary point to a point of the closure.
    ///
    /// Works in the first quadrant by symmetry. The Lagrange condition for
    /// the stationary point q of |q - p|² on the boundary is
    /// q = (a²p₀/(a²-λ), b²p₁/(b²-λ)); the multiplier λ of the nearest point
    /// for p in the closure is the unique root of
    ///   F(λ) = (a p₀/(a²-λ))² + (b p₁/(b²-λ))² - 1
    /// in [0, b²), where F is increasing. Newton steps are clamped to the
    /// current bracket and fall back to bisection when they leave it.
    pub fn closest_boundary_point(&self, p: &Point<2>) -> Result<Point<2>, GeometryError> {
        if self.level(p) > 1.0 + 1e-12 {
            return Err(GeometryError::OutsideDomain);
        }
        let (a, b) = (self.a, self.b);
        let (sx, sy) = (p[0].abs(), p[1].abs());

        // On the major axis the y-equation degenerates; handle it directly.
        if sy == 0.0 {
            let q = if sx >= self.evolute_reach() {
                [a, 0.0]
            } else {
                // λ = b²; two symmetric nearest points, return the upper one.
                let qx = sx * a * a / (a * a - b * b);
                let qy = b * (1.0 - (qx / a) * (qx / a)).max(0.0).sqrt();
                [qx, qy]
            };
            return Ok([q[0].copysign(p[0]), q[1].copysign(p[1])]);
        }

        let fa = a * sx;
        let fb = b * sy;
        let f = |lam: f64| {
            let u = fa / (a * a - lam);
            let v = fb / (b * b - lam);
            u * u + v * v - 1.0
        };
        let fprime = |lam: f64| {
            let da = a * a - lam;
            let db = b * b - lam;
            2.0 * fa * fa / (da * da * da) + 2.0 * fb * fb / (db * db * db)
        };

        let mut lo = 0.0;
        let mut hi = b * b;
        if f(lo) >= 0.0 {
            // On (or numerically on) the boundary already.
            return Ok([p[0], p[1]]);
        }
        let mut lam = 0.5 * (lo + hi);
        for _ in 0..NEWTON_MAX_ITER {
            let val = f(lam);
            if val.abs() <= NEWTON_TOL {
                break;
            }
            if val < 0.0 {
                lo = lam;
            } else {
                hi = lam;
            }
            let step = val / fprime(lam);
            let next = lam - step;
            lam = if next > lo && next < hi {
                next
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= 1e-16 * b * b {
                break;
            }
        }
        let qx = sx * a * a / (a * a - lam);
        let qy = sy * b * b / (b * b - lam);
        Ok([qx.copysign(p[0]), qy.copysign(p[1])])
    }
}

impl Geometry<2> for Ellipse {
    fn contains(&self, x: &Point<2>) -> bool {
        vecn::is_finite(x) && self.level(x) < 1.0
    }

    fn boundary_distance(&self, x: &Point<2>) -> Result<f64, GeometryError> {
        let q = self.closest_boundary_point(x)?;
        Ok(vecn::dist(x, &q))
    }

    fn boundary_distance_gradient(&self, x: &Point<2>) -> Result<Point<2>, GeometryError> {
        if !self.contains(x) {
            return Err(GeometryError::OutsideDomain);
        }
        // Medial axis: the open major-axis segment inside the evolute cusps.
        if x[1].abs() <= MEDIAL_AXIS_REL_TOL * self.b
            && x[0].abs() < self.evolute_reach() - MEDIAL_AXIS_REL_TOL * self.a
        {
            return Err(GeometryError::MedialAxis);
        }
        let q = self.closest_boundary_point(x)?;
        let rho = vecn::dist(x, &q);
        if rho <= f64::EPSILON * self.a {
            return Err(GeometryError::OutsideDomain);
        }
        Ok(vecn::scale(&vecn::sub(x, &q), 1.0 / rho))
    }

    fn diameter(&self) -> f64 {
        2.0 * self.a
    }

    fn bounding_box(&self) -> (Point<2>, Point<2>) {
        ([-self.a, -self.b], [self.a, self.b])
    }
}
