//! Convex domain geometry: membership, distance to the boundary and its
//! gradient, diameter, and interior sampling.
//!
//! The distance gradient is the unit inward normal of the nearest boundary
//! point; on the medial axis (several nearest points) it is reported as
//! ambiguous rather than silently picking one, since callers probe near the
//! boundary and can resample.

mod ellipse;
mod polygon;

pub use ellipse::Ellipse;
pub use polygon::ConvexPolygon;

use alloc::vec::Vec;
use rand::Rng;

use crate::vecn::{self, Point};

#[allow(unused_imports)]
use crate::math::F64Ext;

/// Relative tie tolerance for medial-axis detection, scaled by the diameter.
const MEDIAL_AXIS_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeometryError {
    /// Query point lies outside the closure of the domain.
    OutsideDomain,
    /// Nearest boundary point is not unique (medial axis); caller should
    /// perturb or skip.
    MedialAxis,
    /// Rejection sampling exhausted its budget (margin too large).
    SampleBudgetExceeded,
}

impl core::fmt::Display for GeometryError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            GeometryError::OutsideDomain => write!(f, "point outside the domain closure"),
            GeometryError::MedialAxis => {
                write!(f, "nearest boundary point is ambiguous (medial axis)")
            }
            GeometryError::SampleBudgetExceeded => {
                write!(f, "interior sampling budget exceeded (margin too large?)")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for GeometryError {}

/// Domain construction errors.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainError {
    NonPositiveLength(&'static str),
    AxesOutOfOrder,
    TooFewVertices,
    NotStrictlyConvex,
}

impl core::fmt::Display for DomainError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            DomainError::NonPositiveLength(what) => write!(f, "{what} must be positive"),
            DomainError::AxesOutOfOrder => write!(f, "ellipse requires a >= b > 0"),
            DomainError::TooFewVertices => write!(f, "polygon needs at least 3 vertices"),
            DomainError::NotStrictlyConvex => {
                write!(f, "polygon vertices must be strictly convex, counterclockwise")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for DomainError {}

/// Geometric queries shared by all convex domains of a given dimension.
pub trait Geometry<const N: usize> {
    /// True iff `x` lies in the open interior.
    fn contains(&self, x: &Point<N>) -> bool;

    /// Euclidean distance from `x` to the boundary; `x` must be in the closure.
    fn boundary_distance(&self, x: &Point<N>) -> Result<f64, GeometryError>;

    /// Unit inward normal of the nearest boundary point (the gradient of the
    /// boundary distance at interior points off the medial axis).
    fn boundary_distance_gradient(&self, x: &Point<N>) -> Result<Point<N>, GeometryError>;

    /// sup over point pairs of the closure of their distance.
    fn diameter(&self) -> f64;

    /// Axis-aligned bounding box (lo, hi).
    fn bounding_box(&self) -> (Point<N>, Point<N>);
}

/// Symmetric interval (-L/2, L/2), the one-dimensional domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    length: f64,
}

impl Interval {
    pub fn new(length: f64) -> Result<Self, DomainError> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(DomainError::NonPositiveLength("interval length"));
        }
        Ok(Interval { length })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn half_length(&self) -> f64 {
        0.5 * self.length
    }
}

impl Geometry<1> for Interval {
    fn contains(&self, x: &Point<1>) -> bool {
        x[0].is_finite() && x[0].abs() < self.half_length()
    }

    fn boundary_distance(&self, x: &Point<1>) -> Result<f64, GeometryError> {
        let d = self.half_length() - x[0].abs();
        if d < 0.0 {
            return Err(GeometryError::OutsideDomain);
        }
        Ok(d)
    }

    fn boundary_distance_gradient(&self, x: &Point<1>) -> Result<Point<1>, GeometryError> {
        if x[0].abs() >= self.half_length() {
            return Err(GeometryError::OutsideDomain);
        }
        if x[0].abs() <= MEDIAL_AXIS_REL_TOL * self.length {
            return Err(GeometryError::MedialAxis);
        }
        Ok([-x[0].signum()])
    }

    fn diameter(&self) -> f64 {
        self.length
    }

    fn bounding_box(&self) -> (Point<1>, Point<1>) {
        ([-self.half_length()], [self.half_length()])
    }
}

/// Disk of radius `r` centered at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk {
    radius: f64,
}

impl Disk {
    pub fn new(radius: f64) -> Result<Self, DomainError> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(DomainError::NonPositiveLength("disk radius"));
        }
        Ok(Disk { radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

impl Geometry<2> for Disk {
    fn contains(&self, x: &Point<2>) -> bool {
        vecn::is_finite(x) && vecn::norm(x) < self.radius
    }

    fn boundary_distance(&self, x: &Point<2>) -> Result<f64, GeometryError> {
        let d = self.radius - vecn::norm(x);
        if d < 0.0 {
            return Err(GeometryError::OutsideDomain);
        }
        Ok(d)
    }

    fn boundary_distance_gradient(&self, x: &Point<2>) -> Result<Point<2>, GeometryError> {
        let r = vecn::norm(x);
        if r >= self.radius {
            return Err(GeometryError::OutsideDomain);
        }
        if r <= MEDIAL_AXIS_REL_TOL * self.radius {
            return Err(GeometryError::MedialAxis);
        }
        Ok(vecn::scale(x, -1.0 / r))
    }

    fn diameter(&self) -> f64 {
        2.0 * self.radius
    }

    fn bounding_box(&self) -> (Point<2>, Point<2>) {
        ([-self.radius, -self.radius], [self.radius, self.radius])
    }
}

/// Axis-aligned rectangle (0, w) x (0, h).
///
/// The corners are not smooth, so this domain is reserved for checks with
/// analytic eigenvalues; the coupling verifiers prefer disk and ellipse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rectangle {
    width: f64,
    height: f64,
}

impl Rectangle {
    pub fn new(width: f64, height: f64) -> Result<Self, DomainError> {
        if !(width > 0.0 && height > 0.0) || !width.is_finite() || !height.is_finite() {
            return Err(DomainError::NonPositiveLength("rectangle side"));
        }
        Ok(Rectangle { width, height })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    /// Distances to the four sides: (-x side, +x side, -y side, +y side).
    fn side_distances(&self, x: &Point<2>) -> [f64; 4] {
        [x[0], self.width - x[0], x[1], self.height - x[1]]
    }
}

impl Geometry<2> for Rectangle {
    fn contains(&self, x: &Point<2>) -> bool {
        vecn::is_finite(x)
            && x[0] > 0.0
            && x[0] < self.width
            && x[1] > 0.0
            && x[1] < self.height
    }

    fn boundary_distance(&self, x: &Point<2>) -> Result<f64, GeometryError> {
        let d = self
            .side_distances(x)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if d < 0.0 {
            return Err(GeometryError::OutsideDomain);
        }
        Ok(d)
    }

    fn boundary_distance_gradient(&self, x: &Point<2>) -> Result<Point<2>, GeometryError> {
        if !self.contains(x) {
            return Err(GeometryError::OutsideDomain);
        }
        let d = self.side_distances(x);
        let mut best = 0;
        for k in 1..4 {
            if d[k] < d[best] {
                best = k;
            }
        }
        let tie_tol = MEDIAL_AXIS_REL_TOL * self.diameter();
        for k in 0..4 {
            if k != best && d[k] - d[best] <= tie_tol {
                return Err(GeometryError::MedialAxis);
            }
        }
        Ok(match best {
            0 => [1.0, 0.0],
            1 => [-1.0, 0.0],
            2 => [0.0, 1.0],
            _ => [0.0, -1.0],
        })
    }

    fn diameter(&self) -> f64 {
        self.width.hypot(self.height)
    }

    fn bounding_box(&self) -> (Point<2>, Point<2>) {
        ([0.0, 0.0], [self.width, self.height])
    }
}

/// A planar convex domain of any supported kind.
#[derive(Debug, Clone, PartialEq)]
pub enum PlanarDomain {
    Disk(Disk),
    Ellipse(Ellipse),
    Rectangle(Rectangle),
    Polygon(ConvexPolygon),
}

impl Geometry<2> for PlanarDomain {
    fn contains(&self, x: &Point<2>) -> bool {
        match self {
            PlanarDomain::Disk(d) => d.contains(x),
            PlanarDomain::Ellipse(e) => e.contains(x),
            PlanarDomain::Rectangle(r) => r.contains(x),
            PlanarDomain::Polygon(p) => p.contains(x),
        }
    }

    fn boundary_distance(&self, x: &Point<2>) -> Result<f64, GeometryError> {
        match self {
            PlanarDomain::Disk(d) => d.boundary_distance(x),
            PlanarDomain::Ellipse(e) => e.boundary_distance(x),
            PlanarDomain::Rectangle(r) => r.boundary_distance(x),
            PlanarDomain::Polygon(p) => p.boundary_distance(x),
        }
    }

    fn boundary_distance_gradient(&self, x: &Point<2>) -> Result<Point<2>, GeometryError> {
        match self {
            PlanarDomain::Disk(d) => d.boundary_distance_gradient(x),
            PlanarDomain::Ellipse(e) => e.boundary_distance_gradient(x),
            PlanarDomain::Rectangle(r) => r.boundary_distance_gradient(x),
            PlanarDomain::Polygon(p) => p.boundary_distance_gradient(x),
        }
    }

    fn diameter(&self) -> f64 {
        match self {
            PlanarDomain::Disk(d) => d.diameter(),
            PlanarDomain::Ellipse(e) => e.diameter(),
            PlanarDomain::Rectangle(r) => r.diameter(),
            PlanarDomain::Polygon(p) => p.diameter(),
        }
    }

    fn bounding_box(&self) -> (Point<2>, Point<2>) {
        match self {
            PlanarDomain::Disk(d) => d.bounding_box(),
            PlanarDomain::Ellipse(e) => e.bounding_box(),
            PlanarDomain::Rectangle(r) => r.bounding_box(),
            PlanarDomain::Polygon(p) => p.bounding_box(),
        }
    }
}

/// Any supported convex domain; the interval is one-dimensional, the rest planar.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexDomain {
    Interval(Interval),
    Planar(PlanarDomain),
}

impl ConvexDomain {
    pub fn dim(&self) -> usize {
        match self {
            ConvexDomain::Interval(_) => 1,
            ConvexDomain::Planar(_) => 2,
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            ConvexDomain::Interval(i) => i.diameter(),
            ConvexDomain::Planar(p) => p.diameter(),
        }
    }
}

/// Rejection-sample `count` interior points with boundary distance at least
/// `margin`, deterministically for a given RNG state.
pub fn sample_interior<const N: usize, G, R>(
    geom: &G,
    margin: f64,
    count: usize,
    rng: &mut R,
) -> Result<Vec<Point<N>>, GeometryError>
where
    G: Geometry<N>,
    R: Rng + ?Sized,
{
    let (lo, hi) = geom.bounding_box();
    let mut out = Vec::with_capacity(count);
    let budget = 10_000usize.saturating_mul(count.max(1));
    let mut tries = 0usize;
    while out.len() < count {
        if tries >= budget {
            return Err(GeometryError::SampleBudgetExceeded);
        }
        tries += 1;
        let mut x = [0.0; N];
        for k in 0..N {
            x[k] = rng.random_range(lo[k]..hi[k]);
        }
        if !geom.contains(&x) {
            continue;
        }
        match geom.boundary_distance(&x) {
            Ok(rho) if rho >= margin && rho > 0.0 => out.push(x),
            _ => {}
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn disk_membership_is_open() {
        let d = Disk::new(1.0).unwrap();
        assert!(d.contains(&[0.0, 0.0]));
        assert!(!d.contains(&[1.0, 0.0]));
        assert!(!d.contains(&[f64::NAN, 0.0]));
    }

    #[test]
    fn rectangle_membership() {
        let r = Rectangle::new(1.0, 1.0).unwrap();
        assert!(r.contains(&[0.5, 0.5]));
        assert!(!r.contains(&[0.0, 0.5]));
        assert!(!r.contains(&[1.0001, 0.5]));
    }

    #[test]
    fn boundary_distances_match_closed_forms() {
        let d = Disk::new(1.0).unwrap();
        assert!((d.boundary_distance(&[0.5, 0.0]).unwrap() - 0.5).abs() < 1e-15);
        let r = Rectangle::new(1.0, 1.0).unwrap();
        assert!((r.boundary_distance(&[0.2, 0.5]).unwrap() - 0.2).abs() < 1e-15);
        let i = Interval::new(1.0).unwrap();
        assert!((i.boundary_distance(&[0.3]).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn distance_rejects_exterior_points() {
        let d = Disk::new(1.0).unwrap();
        assert_eq!(
            d.boundary_distance(&[2.0, 0.0]),
            Err(GeometryError::OutsideDomain)
        );
    }

    #[test]
    fn gradients_point_inward() {
        let d = Disk::new(1.0).unwrap();
        let g = d.boundary_distance_gradient(&[0.5, 0.0]).unwrap();
        assert!((g[0] + 1.0).abs() < 1e-12 && g[1].abs() < 1e-12);

        let r = Rectangle::new(1.0, 1.0).unwrap();
        let g = r.boundary_distance_gradient(&[0.2, 0.5]).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-12 && g[1].abs() < 1e-12);
    }

    #[test]
    fn medial_axis_is_ambiguous() {
        let d = Disk::new(1.0).unwrap();
        assert_eq!(
            d.boundary_distance_gradient(&[0.0, 0.0]),
            Err(GeometryError::MedialAxis)
        );
        let r = Rectangle::new(1.0, 1.0).unwrap();
        assert_eq!(
            r.boundary_distance_gradient(&[0.5, 0.5]),
            Err(GeometryError::MedialAxis)
        );
    }

    #[test]
    fn diameters() {
        assert!((Disk::new(1.0).unwrap().diameter() - 2.0).abs() < 1e-15);
        assert!((Rectangle::new(1.0, 1.0).unwrap().diameter() - 2f64.sqrt()).abs() < 1e-15);
        assert!((Interval::new(1.0).unwrap().diameter() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sampling_respects_margin_and_seed() {
        let d = Disk::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts = sample_interior(&d, 0.0, 100, &mut rng).unwrap();
        assert_eq!(pts.len(), 100);
        for p in &pts {
            assert!(vecn::norm(p) < 1.0);
        }
        // Determinism
        let mut rng2 = ChaCha8Rng::seed_from_u64(7);
        let pts2 = sample_interior(&d, 0.0, 100, &mut rng2).unwrap();
        assert_eq!(pts, pts2);
    }

    #[test]
    fn sampling_with_margin_in_rectangle() {
        let r = Rectangle::new(1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts = sample_interior(&r, 0.4, 10, &mut rng).unwrap();
        for p in &pts {
            assert!(p[0] >= 0.4 && p[0] <= 0.6 && p[1] >= 0.4 && p[1] <= 0.6);
        }
    }

    #[test]
    fn sampling_fails_when_margin_exceeds_inradius() {
        let d = Disk::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(
            sample_interior(&d, 1.5, 1, &mut rng),
            Err(GeometryError::SampleBudgetExceeded)
        );
    }
}
