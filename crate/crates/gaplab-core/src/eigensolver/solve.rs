//! Shifted inverse power iteration with deflation for the two lowest
//! Dirichlet eigenpairs, with conjugate-gradient inner solves in 2D and
//! Thomas solves in 1D.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::grid::{Grid1, Grid2};
use super::operator::{DiscreteOperator, TridiagOperator};
use super::SolverError;
use crate::potential::{Potential, Potential1d};
use crate::report::VerificationReport;
use crate::vecn::Point;

#[allow(unused_imports)]
use crate::math::F64Ext;

/// Eigenvalue is accepted when it moves less than this between sweeps.
const EIGENVALUE_TOL: f64 = 1e-10;
/// Max-norm residual target `max |A φ - λ φ| / max |φ|`.
const RESIDUAL_TOL: f64 = 1e-8;
const MAX_SWEEPS: usize = 200;
const CG_MAX_ITER: usize = 20_000;
/// Seed for the deterministic start vector of the deflated (second) eigenpair;
/// a structured start vector can be exactly orthogonal to the first excited
/// mode on symmetric domains, a seeded random one never is.
const START_VECTOR_SEED: u64 = 0x6a70_6c61_625f_7631;

/// Discrete eigenpair data on a 2D grid. `phi0` is strictly positive with
/// max-norm 1; `phi1` is max-norm 1 with arbitrary sign convention.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundState {
    grid: Grid2,
    pub lambda0: f64,
    pub lambda1: f64,
    pub phi0: Vec<f64>,
    pub phi1: Vec<f64>,
    /// max-norm relative residuals of the two eigenpairs.
    pub residual0: f64,
    pub residual1: f64,
}

impl GroundState {
    pub fn grid(&self) -> &Grid2 {
        &self.grid
    }

    pub fn gap(&self) -> f64 {
        self.lambda1 - self.lambda0
    }

    /// Rebuild from stored parts (artifact loading); enforces the positivity,
    /// ordering, and shape invariants but trusts the stored residuals.
    pub fn from_parts(
        grid: Grid2,
        lambda0: f64,
        lambda1: f64,
        phi0: Vec<f64>,
        phi1: Vec<f64>,
        residual0: f64,
        residual1: f64,
    ) -> Result<Self, SolverError> {
        if phi0.len() != grid.node_count() || phi1.len() != grid.node_count() {
            return Err(SolverError::BadGroundState(String::from(
                "eigenvector length does not match grid",
            )));
        }
        if !(lambda0 < lambda1) {
            return Err(SolverError::BadGroundState(format!(
                "eigenvalues out of order: {lambda0} >= {lambda1}"
            )));
        }
        if phi0.iter().any(|&v| !(v > 0.0)) {
            return Err(SolverError::BadGroundState(String::from(
                "ground state not strictly positive",
            )));
        }
        Ok(GroundState {
            grid,
            lambda0,
            lambda1,
            phi0,
            phi1,
            residual0,
            residual1,
        })
    }
}

/// Discrete eigenpair data on the interval grid, same conventions.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigen1d {
    grid: Grid1,
    pub lambda0: f64,
    pub lambda1: f64,
    pub phi0: Vec<f64>,
    pub phi1: Vec<f64>,
    pub residual0: f64,
    pub residual1: f64,
}

impl Eigen1d {
    pub fn grid(&self) -> &Grid1 {
        &self.grid
    }

    pub fn gap(&self) -> f64 {
        self.lambda1 - self.lambda0
    }

    /// Rebuild from stored parts (artifact loading); enforces the positivity,
    /// ordering, and shape invariants but trusts the stored residuals.
    pub fn from_parts(
        grid: Grid1,
        lambda0: f64,
        lambda1: f64,
        phi0: Vec<f64>,
        phi1: Vec<f64>,
        residual0: f64,
        residual1: f64,
    ) -> Result<Self, SolverError> {
        if phi0.len() != grid.node_count() || phi1.len() != grid.node_count() {
            return Err(SolverError::BadGroundState(String::from(
                "eigenvector length does not match grid",
            )));
        }
        if !(lambda0 < lambda1) {
            return Err(SolverError::BadGroundState(format!(
                "eigenvalues out of order: {lambda0} >= {lambda1}"
            )));
        }
        if phi0.iter().any(|&v| !(v > 0.0)) {
            return Err(SolverError::BadGroundState(String::from(
                "ground state not strictly positive",
            )));
        }
        Ok(Eigen1d {
            grid,
            lambda0,
            lambda1,
            phi0,
            phi1,
            residual0,
            residual1,
        })
    }
}

// ---------------------------------------------------------------------------
// Dense-vector helpers
// ---------------------------------------------------------------------------

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for k in 0..a.len() {
        s += a[k] * b[k];
    }
    s
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
}

fn scale_in_place(a: &mut [f64], s: f64) {
    for v in a.iter_mut() {
        *v *= s;
    }
}

/// a -= c*b
fn sub_scaled(a: &mut [f64], c: f64, b: &[f64]) {
    for k in 0..a.len() {
        a[k] -= c * b[k];
    }
}

// ---------------------------------------------------------------------------
// Inner solvers behind one interface
// ---------------------------------------------------------------------------

/// `apply` of a symmetric operator, optionally deflated by a rank-one term
/// `mu * u uᵀ` that lifts an already-converged eigenpair above the spectrum.
struct Deflated<'a, A: Fn(&[f64], &mut [f64])> {
    apply_base: A,
    deflate: Option<(&'a [f64], f64)>,
}

impl<'a, A: Fn(&[f64], &mut [f64])> Deflated<'a, A> {
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        (self.apply_base)(x, out);
        if let Some((u, mu)) = self.deflate {
            let c = mu * dot(u, x);
            for k in 0..out.len() {
                out[k] += c * u[k];
            }
        }
    }
}

enum InnerSolver<'a> {
    /// Conjugate gradients on the (shifted, deflated) sparse operator.
    Cg,
    /// Thomas direct solves; deflation handled by Sherman-Morrison.
    Tridiag(&'a TridiagOperator),
}

struct CgOutcome {
    iterations: usize,
    /// Shifted operator turned out indefinite (shift above the spectrum).
    indefinite: bool,
}

fn cg_solve<A: Fn(&[f64], &mut [f64])>(
    op: &Deflated<'_, A>,
    shift: f64,
    b: &[f64],
    x: &mut [f64],
    tol_rel: f64,
) -> CgOutcome {
    let n = b.len();
    let mut ax = vec![0.0; n];
    op.apply(x, &mut ax);
    let mut r: Vec<f64> = (0..n).map(|k| b[k] - (ax[k] - shift * x[k])).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let bnorm = norm2(b).max(f64::MIN_POSITIVE);
    let target = tol_rel * bnorm;
    let mut it = 0;
    while rr.sqrt() > target && it < CG_MAX_ITER {
        op.apply(&p, &mut ax);
        sub_scaled(&mut ax, shift, &p);
        let pap = dot(&p, &ax);
        if pap <= 0.0 {
            return CgOutcome {
                iterations: it,
                indefinite: true,
            };
        }
        let alpha = rr / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ax[k];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for k in 0..n {
            p[k] = r[k] + beta * p[k];
        }
        rr = rr_new;
        it += 1;
    }
    CgOutcome {
        iterations: it,
        indefinite: false,
    }
}

/// Direct shifted solve for the tridiagonal path, with Sherman-Morrison for
/// the rank-one deflation term.
fn tridiag_solve(
    op: &TridiagOperator,
    deflate: Option<(&[f64], f64)>,
    shift: f64,
    b: &[f64],
    x: &mut [f64],
) {
    match deflate {
        None => op.solve_shifted(shift, b, x),
        Some((u, mu)) => {
            let n = b.len();
            let mut y = vec![0.0; n];
            let mut z = vec![0.0; n];
            op.solve_shifted(shift, b, &mut y);
            op.solve_shifted(shift, u, &mut z);
            let denom = 1.0 + mu * dot(u, &z);
            let c = mu * dot(u, &y) / denom;
            for k in 0..n {
                x[k] = y[k] - c * z[k];
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Inverse power iteration
// ---------------------------------------------------------------------------

struct EigenPair {
    lambda: f64,
    vector: Vec<f64>,
    residual_inf: f64,
}

/// Smallest eigenpair of the (possibly deflated) operator by inverse power
/// iteration. The shift starts at a safe lower bound and is pulled up towards
/// the Rayleigh quotient as the residual shrinks; `lambda - 2*resid` stays
/// below the eigenvalue because the Rayleigh quotient of a symmetric operator
/// is within the residual norm of the nearest eigenvalue.
fn inverse_iteration<A: Fn(&[f64], &mut [f64])>(
    apply_base: A,
    inner: &InnerSolver<'_>,
    deflate: Option<(&[f64], f64)>,
    n: usize,
    sigma_floor: f64,
    start: Vec<f64>,
    label: &str,
) -> Result<EigenPair, SolverError> {
    let op = Deflated {
        apply_base,
        deflate,
    };
    let mut v = start;
    let nm = norm2(&v);
    scale_in_place(&mut v, 1.0 / nm);

    let mut sigma = sigma_floor;
    let mut lam_prev = f64::INFINITY;
    let mut resid2 = f64::INFINITY;
    let mut w = vec![0.0; n];
    let mut av = vec![0.0; n];

    for _sweep in 0..MAX_SWEEPS {
        // Warm start: the solution of (A - sigma) w = v is close to
        // v/(lambda - sigma) once v approximates the eigenvector.
        let guess = if lam_prev.is_finite() && lam_prev - sigma > 0.0 {
            1.0 / (lam_prev - sigma)
        } else {
            0.0
        };
        for k in 0..n {
            w[k] = guess * v[k];
        }
        match inner {
            InnerSolver::Cg => {
                let tol = (0.01 * resid2).clamp(5e-13, 1e-2);
                let out = cg_solve(&op, sigma, &v, &mut w, tol);
                if out.indefinite {
                    // Shift overshot the target eigenvalue; back off and retry.
                    sigma -= 2.0 * (lam_prev - sigma).abs().max(1.0);
                    continue;
                }
                let _ = out.iterations;
            }
            InnerSolver::Tridiag(t) => tridiag_solve(t, deflate, sigma, &v, &mut w),
        }
        if let Some((u, _)) = deflate {
            let c = dot(u, &w);
            sub_scaled(&mut w, c, u);
        }
        let wn = norm2(&w);
        if !(wn > 0.0) || !wn.is_finite() {
            return Err(SolverError::NoConvergence(format!(
                "{label}: inner solve produced a degenerate iterate"
            )));
        }
        for k in 0..n {
            v[k] = w[k] / wn;
        }
        op.apply(&v, &mut av);
        let lam = dot(&v, &av);
        for k in 0..n {
            w[k] = av[k] - lam * v[k]; // reuse w as the residual
        }
        resid2 = norm2(&w);
        let resid_inf = norm_inf(&w) / norm_inf(&v);
        if resid_inf <= RESIDUAL_TOL && (lam - lam_prev).abs() <= EIGENVALUE_TOL {
            return Ok(EigenPair {
                lambda: lam,
                vector: v,
                residual_inf: resid_inf,
            });
        }
        // Cautious Rayleigh re-shift, monotone from below.
        if resid2 < 0.1 * (lam - sigma) {
            let margin = (2.0 * resid2).max(1e-6 * lam.abs().max(1.0));
            sigma = sigma.max(lam - margin);
        }
        lam_prev = lam;
    }
    Err(SolverError::NoConvergence(format!(
        "{label}: residual {resid2:.3e} after {MAX_SWEEPS} sweeps (eigenvalue ~ {lam_prev:.6})"
    )))
}

fn random_start(n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(START_VECTOR_SEED);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Sign-fix to a positive max-component and normalize to max-norm 1.
fn normalize_max(v: &mut [f64]) {
    let mut best = 0usize;
    for k in 1..v.len() {
        if v[k].abs() > v[best].abs() {
            best = k;
        }
    }
    let s = 1.0 / v[best];
    scale_in_place(v, s);
}

// ---------------------------------------------------------------------------
// Public drivers
// ---------------------------------------------------------------------------

/// Two lowest eigenpairs of the assembled 2D operator.
pub fn lowest_eigenpairs(op: &DiscreteOperator) -> Result<GroundState, SolverError> {
    let n = op.n();
    let (glo, ghi) = op.gershgorin();
    let apply = |x: &[f64], out: &mut [f64]| op.apply(x, out);

    let ground = inverse_iteration(
        apply,
        &InnerSolver::Cg,
        None,
        n,
        glo - 1.0,
        vec![1.0; n],
        "ground state",
    )?;

    let mut phi0 = ground.vector;
    // Unit L2 deflation vector before max-norm scaling.
    let u0 = phi0.clone();
    let mu = (ghi - ground.lambda) + 1.0;
    let excited = inverse_iteration(
        apply,
        &InnerSolver::Cg,
        Some((&u0, mu)),
        n,
        ground.lambda,
        random_start(n),
        "first excited state",
    )?;

    normalize_max(&mut phi0);
    if phi0.iter().any(|&v| !(v > 0.0)) {
        return Err(SolverError::BadGroundState(String::from(
            "ground state not strictly positive after sign fix",
        )));
    }
    let mut phi1 = excited.vector;
    normalize_max(&mut phi1);
    if !(ground.lambda < excited.lambda) {
        return Err(SolverError::BadGroundState(format!(
            "eigenvalues out of order: {} >= {}",
            ground.lambda, excited.lambda
        )));
    }
    Ok(GroundState {
        grid: op.grid().clone(),
        lambda0: ground.lambda,
        lambda1: excited.lambda,
        phi0,
        phi1,
        residual0: ground.residual_inf,
        residual1: excited.residual_inf,
    })
}

fn eigen1d_from_operator(op: &TridiagOperator) -> Result<Eigen1d, SolverError> {
    let n = op.n();
    let (glo, ghi) = op.gershgorin();
    let apply = |x: &[f64], out: &mut [f64]| op.apply(x, out);

    let ground = inverse_iteration(
        apply,
        &InnerSolver::Tridiag(op),
        None,
        n,
        glo - 1.0,
        vec![1.0; n],
        "1d ground state",
    )?;
    let u0 = ground.vector.clone();
    let mu = (ghi - ground.lambda) + 1.0;
    let excited = inverse_iteration(
        apply,
        &InnerSolver::Tridiag(op),
        Some((&u0, mu)),
        n,
        ground.lambda,
        random_start(n),
        "1d first excited state",
    )?;

    let mut phi0 = ground.vector;
    normalize_max(&mut phi0);
    if phi0.iter().any(|&v| !(v > 0.0)) {
        return Err(SolverError::BadGroundState(String::from(
            "1d ground state not strictly positive",
        )));
    }
    let mut phi1 = excited.vector;
    normalize_max(&mut phi1);
    if !(ground.lambda < excited.lambda) {
        return Err(SolverError::BadGroundState(String::from(
            "1d eigenvalues out of order",
        )));
    }
    Ok(Eigen1d {
        grid: op.grid().clone(),
        lambda0: ground.lambda,
        lambda1: excited.lambda,
        phi0,
        phi1,
        residual0: ground.residual_inf,
        residual1: excited.residual_inf,
    })
}

/// Lowest Dirichlet eigenpairs of -d²/dz² + Ṽ on [-D/2, D/2] with the even
/// comparison potential Ṽ.
pub fn solve_1d(length: f64, vt: &Potential1d, n: usize) -> Result<Eigen1d, SolverError> {
    let grid = Grid1::new(length, n)?;
    let op = TridiagOperator::new(grid, vt);
    eigen1d_from_operator(&op)
}

/// Lowest Dirichlet eigenpairs on the interval with a general 1D potential.
pub fn solve_interval(length: f64, v: &Potential<1>, n: usize) -> Result<Eigen1d, SolverError> {
    let grid = Grid1::new(length, n)?;
    let op = TridiagOperator::with_potential(grid, v);
    eigen1d_from_operator(&op)
}

// ---------------------------------------------------------------------------
// PDE residual probe for the derived equation satisfied by ∇log φ₀
// ---------------------------------------------------------------------------

/// Pass threshold coefficient: residual must be below `residual_c(λ₀) * h`.
pub fn residual_c(lambda0: f64) -> f64 {
    50.0 * lambda0.abs().max(1.0)
}

/// Checks, by nested central differences of log φ₀ on the grid, that
///   Δ(∇log φ₀) + 2 <∇log φ₀, ∇(∇log φ₀)> = ∇V
/// holds componentwise at the given sample points (snapped to nodes). Sample
/// points must keep ~5h clearance from the boundary so the nested stencils
/// stay inside the mask; points whose stencils leave the mask are skipped.
pub fn residual_pde_gradient(
    gs: &GroundState,
    v: &Potential<2>,
    samples: &[Point<2>],
) -> VerificationReport {
    let grid = gs.grid();
    let h = grid.spacing();
    let log_phi: Vec<f64> = gs.phi0.iter().map(|&p| p.ln()).collect();
    let lp = |i: i64, j: i64| grid.index_at(i, j).map(|k| log_phi[k]);

    // w component c at lattice (i,j) by central difference of log phi.
    let w = |c: usize, i: i64, j: i64| -> Option<f64> {
        let (di, dj) = if c == 0 { (1, 0) } else { (0, 1) };
        Some((lp(i + di, j + dj)? - lp(i - di, j - dj)?) / (2.0 * h))
    };

    let mut max_resid: f64 = 0.0;
    let mut used = 0u64;
    for x in samples {
        let Some((i, j, _, _)) = grid.locate(x) else {
            continue;
        };
        if grid.index_at(i, j).is_none() {
            continue;
        }
        let mut ok = true;
        for c in 0..2 {
            let parts = (|| {
                let center = w(c, i, j)?;
                let wxp = w(c, i + 1, j)?;
                let wxm = w(c, i - 1, j)?;
                let wyp = w(c, i, j + 1)?;
                let wym = w(c, i, j - 1)?;
                let lap = (wxp + wxm + wyp + wym - 4.0 * center) / (h * h);
                let grad_w = [(wxp - wxm) / (2.0 * h), (wyp - wym) / (2.0 * h)];
                let wvec = [w(0, i, j)?, w(1, i, j)?];
                Some(lap + 2.0 * (wvec[0] * grad_w[0] + wvec[1] * grad_w[1]))
            })();
            match parts {
                Some(lhs) => {
                    let p = grid.node_position(grid.index_at(i, j).unwrap());
                    let rhs = v.grad(&p)[c];
                    max_resid = max_resid.max((lhs - rhs).abs());
                }
                None => {
                    ok = false;
                }
            }
        }
        if ok {
            used += 1;
        }
    }
    let c = residual_c(gs.lambda0);
    let mut r = VerificationReport::evaluate(
        "pde_residual_log_gradient",
        c * h - max_resid,
        0.0,
        used,
    );
    r.push_meta("h", h);
    r.push_meta("max_residual", max_resid);
    r.push_meta("threshold_C", c);
    r
}

/// 1D analogue: w'' + 2 w w' = V' with w = (log φ₀)'.
pub fn residual_pde_gradient_1d<F: Fn(f64) -> f64>(
    eig: &Eigen1d,
    v_prime: F,
    samples: &[f64],
) -> VerificationReport {
    let grid = eig.grid();
    let h = grid.spacing();
    let n = grid.node_count();
    let log_phi: Vec<f64> = eig.phi0.iter().map(|&p| p.ln()).collect();
    let w = |k: usize| -> Option<f64> {
        if k >= 1 && k + 1 < n {
            Some((log_phi[k + 1] - log_phi[k - 1]) / (2.0 * h))
        } else {
            None
        }
    };
    let mut max_resid: f64 = 0.0;
    let mut used = 0u64;
    for &z in samples {
        let kf = (z - grid.node_position(0)) / h;
        let k = kf.floor() as i64;
        if k < 0 || k as usize >= n {
            continue;
        }
        let k = k as usize;
        let parts = (|| {
            let center = w(k)?;
            let wp = w(k + 1)?;
            let wm = w(k.checked_sub(1)?)?;
            let lap = (wp + wm - 2.0 * center) / (h * h);
            let dw = (wp - wm) / (2.0 * h);
            Some(lap + 2.0 * center * dw)
        })();
        if let Some(lhs) = parts {
            let rhs = v_prime(grid.node_position(k));
            max_resid = max_resid.max((lhs - rhs).abs());
            used += 1;
        }
    }
    let c = residual_c(eig.lambda0);
    let mut r = VerificationReport::evaluate(
        "pde_residual_log_gradient_1d",
        c * h - max_resid,
        0.0,
        used,
    );
    r.push_meta("h", h);
    r.push_meta("max_residual", max_resid);
    r.push_meta("threshold_C", c);
    r
}
