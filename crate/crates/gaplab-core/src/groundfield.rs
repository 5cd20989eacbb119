//! Continuous-space evaluation of φ₀ and ∇log φ₀ built on the grid eigenpair,
//! the 1D comparison profile ψ_D, and boundary/Hessian probes.
//!
//! Interpolated gradients degenerate where φ₀ → 0, so inside a clamp radius of
//! the boundary the field substitutes the asymptote (1/ρ)∇ρ of the ground
//! state's normal log-derivative, blended linearly over one more clamp radius
//! to avoid a jump. This keeps the simulated drift inward-pointing with the
//! strength the boundary analysis requires.

use alloc::vec::Vec;

use crate::domain::{Geometry, GeometryError};
use crate::eigensolver::{Eigen1d, GroundState};
use crate::vecn::{self, Point};

#[allow(unused_imports)]
use crate::math::F64Ext;

/// Clamp radius in grid spacings: below 3h the interpolated gradient is noise.
pub const CLAMP_SPACINGS: f64 = 3.0;
/// Minimum pair separation for the chord difference.
pub const MIN_SEPARATION: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldError {
    /// Query point outside the domain.
    OutsideDomain,
    /// Interpolation or difference stencil leaves the valid interior band.
    StencilOutside,
    /// Boundary-distance gradient ambiguous (medial axis) where it was needed.
    AmbiguousNormal,
    /// ψ_D queried at or beyond its pole z = D/2.
    PsiPole,
    /// Chord endpoints numerically coincide.
    CoincidentPoints,
    /// Observable is constant (φ₁/φ₀ degenerate).
    DegenerateObservable,
}

impl core::fmt::Display for FieldError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            FieldError::OutsideDomain => write!(f, "query point outside the domain"),
            FieldError::StencilOutside => write!(f, "stencil leaves the valid interior band"),
            FieldError::AmbiguousNormal => write!(f, "boundary normal ambiguous at query point"),
            FieldError::PsiPole => write!(f, "psi queried at or beyond its pole z = D/2"),
            FieldError::CoincidentPoints => write!(f, "chord endpoints numerically coincide"),
            FieldError::DegenerateObservable => write!(f, "observable is constant"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for FieldError {}

impl From<GeometryError> for FieldError {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::MedialAxis => FieldError::AmbiguousNormal,
            _ => FieldError::OutsideDomain,
        }
    }
}

/// The drift data a coupling simulation needs: ∇log φ₀ as a function of
/// position, and its chord difference for pairs.
pub trait DriftField<const N: usize> {
    fn log_gradient(&self, x: &Point<N>) -> Result<Point<N>, FieldError>;

    /// `<∇log φ₀(x) - ∇log φ₀(y), (x-y)/|x-y|>`, the quantity the
    /// log-concavity modulus bounds.
    fn chord_diff(&self, x: &Point<N>, y: &Point<N>) -> Result<f64, FieldError> {
        let chord = vecn::sub(x, y);
        let len = vecn::norm(&chord);
        if len < MIN_SEPARATION {
            return Err(FieldError::CoincidentPoints);
        }
        let gx = self.log_gradient(x)?;
        let gy = self.log_gradient(y)?;
        Ok(vecn::dot(&vecn::sub(&gx, &gy), &chord) / len)
    }
}

// ---------------------------------------------------------------------------
// ψ_D: log-derivative of the 1D comparison eigenfunction cos(πz/D)
// ---------------------------------------------------------------------------

fn psi_check(d: f64, z: f64) -> Result<f64, FieldError> {
    if !(z >= 0.0) || z >= 0.5 * d {
        return Err(FieldError::PsiPole);
    }
    Ok(core::f64::consts::PI / d)
}

/// ψ_D(z) = −(π/D) tan(πz/D), on [0, D/2).
pub fn psi(d: f64, z: f64) -> Result<f64, FieldError> {
    let k = psi_check(d, z)?;
    Ok(-k * (k * z).tan())
}

/// ψ′_D(z) = −(π/D)² sec²(πz/D).
pub fn psi_prime(d: f64, z: f64) -> Result<f64, FieldError> {
    let k = psi_check(d, z)?;
    let c = (k * z).cos();
    Ok(-k * k / (c * c))
}

/// ψ″_D(z) = −2(π/D)³ sec²(πz/D) tan(πz/D).
///
/// Grouped as −2·(k tan)·(k²sec²) so the products round exactly like
/// 2·ψ·ψ′ and the defining identity ψ″ + 2ψψ′ cancels to machine zero.
pub fn psi_second(d: f64, z: f64) -> Result<f64, FieldError> {
    let k = psi_check(d, z)?;
    let c = (k * z).cos();
    Ok(-2.0 * (k * (k * z).tan()) * (k * k / (c * c)))
}

/// Inward normal with a deterministic tie-breaking fallback: on the medial
/// axis (rectangle corner diagonals reach into the clamp band) the query is
/// perturbed by a fixed tiny offset until one nearest wall wins. The winning
/// single-wall normal under-counts the second wall's repulsion but keeps the
/// drift strongly inward, which is all the clamp needs.
pub fn robust_inward_normal<const N: usize, G: Geometry<N>>(
    geom: &G,
    x: &Point<N>,
) -> Result<Point<N>, FieldError> {
    match geom.boundary_distance_gradient(x) {
        Ok(n) => return Ok(n),
        Err(GeometryError::MedialAxis) => {}
        Err(e) => return Err(e.into()),
    }
    let eps = 1e-9 * geom.diameter();
    for sign in [1.0, -1.0] {
        for axis in 0..N {
            let mut p = *x;
            p[axis] += sign * eps;
            if let Ok(n) = geom.boundary_distance_gradient(&p) {
                return Ok(n);
            }
        }
    }
    Err(FieldError::AmbiguousNormal)
}

// ---------------------------------------------------------------------------
// 2D grid-backed field
// ---------------------------------------------------------------------------

/// Bilinear-interpolating view of a 2D ground state: log φ₀, its gradient
/// with the near-boundary clamp, and probe helpers.
pub struct GridField2<'a, G: Geometry<2>> {
    geom: &'a G,
    gs: &'a GroundState,
    log_phi: Vec<f64>,
    /// Node-wise central differences of log φ₀ where both neighbors exist.
    grad: Vec<[f64; 2]>,
    grad_valid: Vec<bool>,
    clamp_radius: f64,
}

impl<'a, G: Geometry<2>> GridField2<'a, G> {
    pub fn new(geom: &'a G, gs: &'a GroundState) -> Self {
        let grid = gs.grid();
        let h = grid.spacing();
        let n = grid.node_count();
        let log_phi: Vec<f64> = gs.phi0.iter().map(|&p| p.ln()).collect();
        let mut grad = Vec::with_capacity(n);
        let mut grad_valid = Vec::with_capacity(n);
        for &[w, e, s, nn] in grid.neighbors() {
            if w >= 0 && e >= 0 && s >= 0 && nn >= 0 {
                grad.push([
                    (log_phi[e as usize] - log_phi[w as usize]) / (2.0 * h),
                    (log_phi[nn as usize] - log_phi[s as usize]) / (2.0 * h),
                ]);
                grad_valid.push(true);
            } else {
                grad.push([0.0, 0.0]);
                grad_valid.push(false);
            }
        }
        GridField2 {
            geom,
            gs,
            log_phi,
            grad,
            grad_valid,
            clamp_radius: CLAMP_SPACINGS * h,
        }
    }

    pub fn ground_state(&self) -> &GroundState {
        self.gs
    }

    pub fn geometry(&self) -> &G {
        self.geom
    }

    pub fn clamp_radius(&self) -> f64 {
        self.clamp_radius
    }

    pub fn spacing(&self) -> f64 {
        self.gs.grid().spacing()
    }

    /// Corner indices and weights of the cell containing x.
    fn cell(&self, x: &Point<2>) -> Result<([usize; 4], [f64; 4]), FieldError> {
        let grid = self.gs.grid();
        let (i, j, fx, fy) = grid.locate(x).ok_or(FieldError::OutsideDomain)?;
        let idx = [
            grid.index_at(i, j),
            grid.index_at(i + 1, j),
            grid.index_at(i, j + 1),
            grid.index_at(i + 1, j + 1),
        ];
        let mut out = [0usize; 4];
        for (slot, v) in out.iter_mut().zip(idx) {
            *slot = v.ok_or(FieldError::StencilOutside)?;
        }
        let w = [
            (1.0 - fx) * (1.0 - fy),
            fx * (1.0 - fy),
            (1.0 - fx) * fy,
            fx * fy,
        ];
        Ok((out, w))
    }

    /// Bilinear interpolation of log φ₀.
    pub fn log_phi0(&self, x: &Point<2>) -> Result<f64, FieldError> {
        let (idx, w) = self.cell(x)?;
        Ok((0..4).map(|c| w[c] * self.log_phi[idx[c]]).sum())
    }

    /// Bilinear interpolation of φ₀ itself.
    pub fn phi0(&self, x: &Point<2>) -> Result<f64, FieldError> {
        let (idx, w) = self.cell(x)?;
        Ok((0..4).map(|c| w[c] * self.gs.phi0[idx[c]]).sum())
    }

    /// Pure interpolated gradient with no near-boundary clamp; used by the
    /// boundary probes so they measure the discrete field, not the clamp.
    pub fn log_gradient_raw(&self, x: &Point<2>) -> Result<[f64; 2], FieldError> {
        let (idx, w) = self.cell(x)?;
        let mut g = [0.0, 0.0];
        for c in 0..4 {
            if !self.grad_valid[idx[c]] {
                return Err(FieldError::StencilOutside);
            }
            g[0] += w[c] * self.grad[idx[c]][0];
            g[1] += w[c] * self.grad[idx[c]][1];
        }
        Ok(g)
    }

    fn asymptote(&self, x: &Point<2>, rho: f64) -> Result<[f64; 2], FieldError> {
        let n = robust_inward_normal(self.geom, x)?;
        Ok(vecn::scale(&n, 1.0 / rho.max(1e-300)))
    }

    /// Second central difference of log φ₀ along `direction` with step h.
    ///
    /// Verifies (a) a global upper bound on the log-Hessian and (b) its
    /// −c/ρ divergence near the boundary in the normal direction; the probe
    /// step stays at h because differencing interpolants below grid scale is
    /// noise.
    pub fn hessian_probe(&self, x: &Point<2>, direction: &Point<2>) -> Result<f64, FieldError> {
        let h = self.spacing();
        let xp = vecn::axpy(x, h, direction);
        let xm = vecn::axpy(x, -h, direction);
        if !self.geom.contains(&xp) || !self.geom.contains(&xm) {
            return Err(FieldError::StencilOutside);
        }
        let lp = self.log_phi0(&xp)?;
        let lm = self.log_phi0(&xm)?;
        let l0 = self.log_phi0(x)?;
        Ok((lp + lm - 2.0 * l0) / (h * h))
    }
}

impl<'a, G: Geometry<2>> DriftField<2> for GridField2<'a, G> {
    fn log_gradient(&self, x: &Point<2>) -> Result<[f64; 2], FieldError> {
        if !self.geom.contains(x) {
            return Err(FieldError::OutsideDomain);
        }
        let rho = self.geom.boundary_distance(x)?;
        let c = self.clamp_radius;
        if rho >= 2.0 * c {
            return self.log_gradient_raw(x);
        }
        if rho < c {
            return self.asymptote(x, rho);
        }
        let w = (rho - c) / c;
        let raw = self.log_gradient_raw(x)?;
        let asym = self.asymptote(x, rho)?;
        Ok([
            w * raw[0] + (1.0 - w) * asym[0],
            w * raw[1] + (1.0 - w) * asym[1],
        ])
    }
}

// ---------------------------------------------------------------------------
// 1D grid-backed field
// ---------------------------------------------------------------------------

/// Linear-interpolating view of a 1D eigenpair on (-L/2, L/2).
pub struct GridField1<'a> {
    eig: &'a Eigen1d,
    log_phi: Vec<f64>,
    grad: Vec<f64>,
    clamp_radius: f64,
}

impl<'a> GridField1<'a> {
    pub fn new(eig: &'a Eigen1d) -> Self {
        let h = eig.grid().spacing();
        let n = eig.grid().node_count();
        let log_phi: Vec<f64> = eig.phi0.iter().map(|&p| p.ln()).collect();
        let mut grad = Vec::with_capacity(n);
        for k in 0..n {
            if k >= 1 && k + 1 < n {
                grad.push((log_phi[k + 1] - log_phi[k - 1]) / (2.0 * h));
            } else {
                grad.push(f64::NAN);
            }
        }
        GridField1 {
            eig,
            log_phi,
            grad,
            clamp_radius: CLAMP_SPACINGS * h,
        }
    }

    pub fn eigen(&self) -> &Eigen1d {
        self.eig
    }

    pub fn spacing(&self) -> f64 {
        self.eig.grid().spacing()
    }

    pub fn clamp_radius(&self) -> f64 {
        self.clamp_radius
    }

    fn half_length(&self) -> f64 {
        self.eig.grid().half_length()
    }

    fn cell(&self, z: f64) -> Result<(usize, f64), FieldError> {
        let g = self.eig.grid();
        if z.abs() >= self.half_length() {
            return Err(FieldError::OutsideDomain);
        }
        let f = (z - g.node_position(0)) / g.spacing();
        let k = f.floor();
        if k < 0.0 || (k as usize) + 1 >= g.node_count() {
            return Err(FieldError::StencilOutside);
        }
        Ok((k as usize, f - k))
    }

    pub fn log_phi0(&self, z: f64) -> Result<f64, FieldError> {
        let (k, t) = self.cell(z)?;
        Ok((1.0 - t) * self.log_phi[k] + t * self.log_phi[k + 1])
    }

    pub fn log_gradient_raw(&self, z: f64) -> Result<f64, FieldError> {
        let (k, t) = self.cell(z)?;
        let a = self.grad[k];
        let b = self.grad[k + 1];
        if !a.is_finite() || !b.is_finite() {
            return Err(FieldError::StencilOutside);
        }
        Ok((1.0 - t) * a + t * b)
    }

    pub fn hessian_probe(&self, z: f64) -> Result<f64, FieldError> {
        let h = self.spacing();
        if z.abs() + h >= self.half_length() {
            return Err(FieldError::StencilOutside);
        }
        let lp = self.log_phi0(z + h)?;
        let lm = self.log_phi0(z - h)?;
        let l0 = self.log_phi0(z)?;
        Ok((lp + lm - 2.0 * l0) / (h * h))
    }
}

impl<'a> DriftField<1> for GridField1<'a> {
    fn log_gradient(&self, x: &Point<1>) -> Result<[f64; 1], FieldError> {
        let z = x[0];
        let half = self.half_length();
        if z.abs() >= half {
            return Err(FieldError::OutsideDomain);
        }
        let rho = half - z.abs();
        let c = self.clamp_radius;
        if rho >= 2.0 * c {
            return Ok([self.log_gradient_raw(z)?]);
        }
        let asym = -z.signum() / rho.max(1e-300);
        if rho < c {
            return Ok([asym]);
        }
        let w = (rho - c) / c;
        Ok([w * self.log_gradient_raw(z)? + (1.0 - w) * asym])
    }
}

// ---------------------------------------------------------------------------
// Ratio observable v₀ = φ₁/φ₀
// ---------------------------------------------------------------------------

/// φ₁/φ₀ with the same near-boundary care as the gradient field: inside the
/// clamp radius the query point is pulled back along the inward normal to
/// where both eigenfunctions are resolved.
pub struct RatioField2<'a, G: Geometry<2>> {
    geom: &'a G,
    gs: &'a GroundState,
    clamp_radius: f64,
}

impl<'a, G: Geometry<2>> RatioField2<'a, G> {
    pub fn new(geom: &'a G, gs: &'a GroundState) -> Result<Self, FieldError> {
        let h = gs.grid().spacing();
        // Degeneracy check on well-resolved nodes.
        let grid = gs.grid();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for k in 0..grid.node_count() {
            if gs.phi0[k] > 1e-3 {
                let r = gs.phi1[k] / gs.phi0[k];
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
        if !(hi - lo > 1e-8 * (hi.abs() + lo.abs() + 1.0)) {
            return Err(FieldError::DegenerateObservable);
        }
        Ok(RatioField2 {
            geom,
            gs,
            clamp_radius: CLAMP_SPACINGS * h,
        })
    }

    pub fn value(&self, x: &Point<2>) -> Result<f64, FieldError> {
        if !self.geom.contains(x) {
            return Err(FieldError::OutsideDomain);
        }
        let rho = self.geom.boundary_distance(x)?;
        let mut p = *x;
        if rho < self.clamp_radius {
            let n = robust_inward_normal(self.geom, x)?;
            p = vecn::axpy(x, self.clamp_radius - rho, &n);
        }
        let grid = self.gs.grid();
        let (i, j, fx, fy) = grid.locate(&p).ok_or(FieldError::OutsideDomain)?;
        let idx = [
            grid.index_at(i, j),
            grid.index_at(i + 1, j),
            grid.index_at(i, j + 1),
            grid.index_at(i + 1, j + 1),
        ];
        let w = [
            (1.0 - fx) * (1.0 - fy),
            fx * (1.0 - fy),
            (1.0 - fx) * fy,
            fx * fy,
        ];
        let mut num = 0.0;
        let mut den = 0.0;
        for c in 0..4 {
            let k = idx[c].ok_or(FieldError::StencilOutside)?;
            num += w[c] * self.gs.phi1[k];
            den += w[c] * self.gs.phi0[k];
        }
        if !(den > 0.0) {
            return Err(FieldError::StencilOutside);
        }
        Ok(num / den)
    }
}

/// 1D analogue of [`RatioField2`].
pub struct RatioField1<'a> {
    eig: &'a Eigen1d,
    clamp_radius: f64,
}

impl<'a> RatioField1<'a> {
    pub fn new(eig: &'a Eigen1d) -> Result<Self, FieldError> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for k in 0..eig.grid().node_count() {
            if eig.phi0[k] > 1e-3 {
                let r = eig.phi1[k] / eig.phi0[k];
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
        if !(hi - lo > 1e-8 * (hi.abs() + lo.abs() + 1.0)) {
            return Err(FieldError::DegenerateObservable);
        }
        Ok(RatioField1 {
            eig,
            clamp_radius: CLAMP_SPACINGS * eig.grid().spacing(),
        })
    }

    pub fn value(&self, z: f64) -> Result<f64, FieldError> {
        let g = self.eig.grid();
        let half = g.half_length();
        if z.abs() >= half {
            return Err(FieldError::OutsideDomain);
        }
        let rho = half - z.abs();
        let mut p = z;
        if rho < self.clamp_radius {
            p += (self.clamp_radius - rho) * (-z.signum());
        }
        let f = (p - g.node_position(0)) / g.spacing();
        let k = f.floor();
        if k < 0.0 || (k as usize) + 1 >= g.node_count() {
            return Err(FieldError::StencilOutside);
        }
        let (k, t) = (k as usize, f - f.floor());
        let num = (1.0 - t) * self.eig.phi1[k] + t * self.eig.phi1[k + 1];
        let den = (1.0 - t) * self.eig.phi0[k] + t * self.eig.phi0[k + 1];
        if !(den > 0.0) {
            return Err(FieldError::StencilOutside);
        }
        Ok(num / den)
    }
}

// ---------------------------------------------------------------------------
// Boundary probes
// ---------------------------------------------------------------------------

/// One probe station on an inward normal line.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundaryProbe {
    pub rho: f64,
    /// ρ · <∇log φ₀, ∇ρ>, which tends to 1 at the boundary.
    pub normal_product: f64,
    /// ρ · (second difference of log φ₀ along the normal); stays below a
    /// negative constant near the boundary.
    pub scaled_normal_hessian: f64,
}

/// Near-boundary behavior of the field along a family of normal lines.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundaryProfile {
    /// Probes averaged over the lines, at strictly decreasing ρ.
    pub probes: Vec<BoundaryProbe>,
    /// Estimated range [θ̂₀, θ̂₁] of |∇φ₀| on the innermost band.
    pub gradient_norm_range: (f64, f64),
    pub lines: u64,
}

/// Anchor points on the boundary with inward normals, derived from interior
/// samples via the distance gradient (medial-axis samples are skipped).
pub fn normal_anchors<G: Geometry<2>, R: rand::Rng + ?Sized>(
    geom: &G,
    count: usize,
    rng: &mut R,
) -> Result<Vec<(Point<2>, Point<2>)>, GeometryError> {
    let margin = 0.02 * geom.diameter();
    let samples = crate::domain::sample_interior(geom, margin, 4 * count, rng)?;
    let mut anchors = Vec::with_capacity(count);
    for x in samples {
        if anchors.len() >= count {
            break;
        }
        let (Ok(rho), Ok(n)) = (geom.boundary_distance(&x), geom.boundary_distance_gradient(&x))
        else {
            continue;
        };
        let b = vecn::axpy(&x, -rho, &n);
        anchors.push((b, n));
    }
    if anchors.is_empty() {
        return Err(GeometryError::SampleBudgetExceeded);
    }
    Ok(anchors)
}

/// Record ρ·<∇log φ₀, ∇ρ> and the scaled normal Hessian on a decreasing-ρ
/// sweep along the given normal lines, using the raw (unclamped) field.
pub fn boundary_profile<G: Geometry<2>>(
    field: &GridField2<'_, G>,
    anchors: &[(Point<2>, Point<2>)],
    rhos: &[f64],
) -> BoundaryProfile {
    let mut probes = Vec::with_capacity(rhos.len());
    let mut theta_lo = f64::INFINITY;
    let mut theta_hi: f64 = 0.0;
    let innermost = rhos.iter().cloned().fold(f64::INFINITY, f64::min);
    for &rho in rhos {
        let mut np_sum = 0.0;
        let mut np_count = 0u32;
        let mut hess_sum = 0.0;
        let mut hess_count = 0u32;
        for (b, normal) in anchors {
            let x = vecn::axpy(b, rho, normal);
            let Ok(g) = field.log_gradient_raw(&x) else {
                continue;
            };
            let Ok(grad_rho) = field.geometry().boundary_distance_gradient(&x) else {
                continue;
            };
            np_sum += rho * vecn::dot(&g, &grad_rho);
            np_count += 1;
            if let Ok(hs) = field.hessian_probe(&x, normal) {
                hess_sum += rho * hs;
                hess_count += 1;
            }
            if rho == innermost {
                if let Ok(phi) = field.phi0(&x) {
                    let theta = phi * vecn::norm(&g);
                    theta_lo = theta_lo.min(theta);
                    theta_hi = theta_hi.max(theta);
                }
            }
        }
        if np_count > 0 {
            probes.push(BoundaryProbe {
                rho,
                normal_product: np_sum / np_count as f64,
                scaled_normal_hessian: if hess_count > 0 {
                    hess_sum / hess_count as f64
                } else {
                    f64::NAN
                },
            });
        }
    }
    BoundaryProfile {
        probes,
        gradient_norm_range: (theta_lo, theta_hi),
        lines: anchors.len() as u64,
    }
}
