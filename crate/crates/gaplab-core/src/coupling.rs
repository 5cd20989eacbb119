//! Reflection-coupled diffusion pair driven by 2∇log φ₀, integrated by
//! Euler–Maruyama with discrete coupling and boundary stopping.
//!
//! The two copies share each Gaussian increment; the second copy sees it
//! reflected across the hyperplane perpendicular to the current separation,
//! so the separation diffuses in one dimension. Steps that would exit the
//! domain are rejected and retried with a halved substep: the continuous
//! process never exits, so exits are discretization error to suppress, not
//! events to model.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::domain::Geometry;
use crate::groundfield::{psi_prime, DriftField, FieldError, MIN_SEPARATION};
use crate::vecn::{self, Point};

#[allow(unused_imports)]
use crate::math::F64Ext;

/// Required ratio eta / sqrt(2 dt): below the per-step noise scale, threshold
/// crossings are missed by the discrete coupling detector.
pub const ETA_SAFETY_FACTOR: f64 = 4.0;
/// Bound on step-halving retries before a trajectory is abandoned at the wall.
pub const MAX_STEP_RETRIES: u32 = 12;

/// Stream id offsets reserved for non-trajectory consumers of the seed.
pub const STREAM_PAIR_SAMPLING: u64 = 1 << 40;
pub const STREAM_PROBES: u64 = (1 << 40) + 1;
pub const STREAM_GAP_PAIRS: u64 = (1 << 40) + 2;
/// Per-start-pair stream offset for ensembles over several initial pairs.
pub const STREAM_PER_PAIR: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CouplingError {
    Field(FieldError),
    /// Start points violate the preconditions of the simulation.
    InvalidStart(&'static str),
    /// Configuration invariant broken.
    Config(&'static str),
}

impl From<FieldError> for CouplingError {
    fn from(e: FieldError) -> Self {
        CouplingError::Field(e)
    }
}

impl core::fmt::Display for CouplingError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            CouplingError::Field(e) => write!(f, "field evaluation failed: {e}"),
            CouplingError::InvalidStart(m) => write!(f, "invalid start: {m}"),
            CouplingError::Config(m) => write!(f, "invalid simulation config: {m}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CouplingError {}

/// Simulation parameters. `eta` is the coupling threshold on |X-Y|, `delta`
/// the boundary threshold on min(ρ(X), ρ(Y)).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimConfig {
    pub dt: f64,
    pub eta: f64,
    pub delta: f64,
    pub horizon: f64,
    pub n_traj: u32,
    pub seed: u64,
    pub record_stride: u32,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), CouplingError> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(CouplingError::Config("dt must be positive"));
        }
        if !(self.eta > 0.0) {
            return Err(CouplingError::Config("eta must be positive"));
        }
        if self.eta_safety_factor() < ETA_SAFETY_FACTOR - 1e-12 {
            return Err(CouplingError::Config(
                "eta below the noise scale: need eta >= 4 sqrt(2 dt)",
            ));
        }
        if !(self.delta > 0.0) {
            return Err(CouplingError::Config("delta must be positive"));
        }
        if !(self.horizon > 0.0) {
            return Err(CouplingError::Config("horizon must be positive"));
        }
        if self.n_traj == 0 {
            return Err(CouplingError::Config("n_traj must be at least 1"));
        }
        if self.record_stride == 0 {
            return Err(CouplingError::Config("record_stride must be at least 1"));
        }
        Ok(())
    }

    /// eta in units of the per-step noise scale sqrt(2 dt); recorded in reports.
    pub fn eta_safety_factor(&self) -> f64 {
        self.eta / (2.0 * self.dt).sqrt()
    }
}

/// The deterministic per-trajectory random stream: one counter-based ChaCha
/// stream per (seed, stream id), independent of scheduling order.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

// ---------------------------------------------------------------------------
// Reflection
// ---------------------------------------------------------------------------

/// Householder reflection across the hyperplane perpendicular to x - y.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reflection<const N: usize> {
    axis: Point<N>,
}

impl<const N: usize> Reflection<N> {
    pub fn new(x: &Point<N>, y: &Point<N>) -> Result<Self, CouplingError> {
        let d = vecn::sub(x, y);
        let len = vecn::norm(&d);
        if len < MIN_SEPARATION {
            return Err(CouplingError::InvalidStart(
                "reflection undefined for coincident points",
            ));
        }
        Ok(Reflection {
            axis: vecn::scale(&d, 1.0 / len),
        })
    }

    /// Unit vector e = (x-y)/|x-y|.
    pub fn axis(&self) -> &Point<N> {
        &self.axis
    }

    /// M v = v - 2 <e, v> e
    pub fn apply(&self, v: &Point<N>) -> Point<N> {
        let c = 2.0 * vecn::dot(&self.axis, v);
        vecn::axpy(v, -c, &self.axis)
    }

    /// Dense matrix I - 2 e eᵀ (for the algebra checks).
    pub fn matrix(&self) -> [[f64; N]; N] {
        let mut m = [[0.0; N]; N];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                *entry = if i == j { 1.0 } else { 0.0 };
                *entry -= 2.0 * self.axis[i] * self.axis[j];
            }
        }
        m
    }
}

/// One raw Euler–Maruyama step of the coupled pair, no exit handling:
///   X' = X + √2 ΔB + 2 ∇log φ₀(X) dt
///   Y' = Y + √2 M(X,Y) ΔB + 2 ∇log φ₀(Y) dt
/// with the same increment ΔB (variance dt per coordinate).
pub fn step_pair<const N: usize, F: DriftField<N>>(
    field: &F,
    x: &Point<N>,
    y: &Point<N>,
    dt: f64,
    db: &Point<N>,
) -> Result<(Point<N>, Point<N>), CouplingError> {
    let refl = Reflection::new(x, y)?;
    let gx = field.log_gradient(x)?;
    let gy = field.log_gradient(y)?;
    let sqrt2 = core::f64::consts::SQRT_2;
    let mut xp = *x;
    let mut yp = *y;
    let mdb = refl.apply(db);
    for k in 0..N {
        xp[k] += sqrt2 * db[k] + 2.0 * gx[k] * dt;
        yp[k] += sqrt2 * mdb[k] + 2.0 * gy[k] * dt;
    }
    Ok((xp, yp))
}

// ---------------------------------------------------------------------------
// Trajectories
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum Outcome {
    /// |X-Y| reached eta at time tau; Y follows X afterwards.
    Coupled { tau: f64 },
    /// min(ρ(X), ρ(Y)) reached delta (or retries exhausted) at time sigma.
    Boundary { sigma: f64 },
    /// Ran to the time horizon.
    Horizon,
}

/// Subsampled time series of one coupled pair.
///
/// Records hold the measured state, including at the stopping time; the
/// post-coupling convention ξ ≡ 0 is applied by [`CouplingTrajectory::xi_at`],
/// not baked into the records.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CouplingTrajectory {
    pub times: Vec<f64>,
    /// ξ = |X-Y|/2 at each record.
    pub xi: Vec<f64>,
    /// Chord difference of ∇log φ₀ at each record.
    pub chord: Vec<f64>,
    /// ∫₀ᵗ 2 ψ'_{D₁}(ξ_s) ds at each record, when requested.
    pub psi_integral: Option<Vec<f64>>,
    pub outcome: Outcome,
    pub final_time: f64,
}

impl CouplingTrajectory {
    /// Stopping time, if the trajectory stopped before the horizon.
    pub fn stop_time(&self) -> Option<f64> {
        match self.outcome {
            Outcome::Coupled { tau } => Some(tau),
            Outcome::Boundary { sigma } => Some(sigma),
            Outcome::Horizon => None,
        }
    }

    /// ξ at time `t`: the latest record at or before `t`, with ξ ≡ 0 after a
    /// coupling and ξ frozen after a boundary stop.
    pub fn xi_at(&self, t: f64) -> f64 {
        if let Outcome::Coupled { tau } = self.outcome {
            if t >= tau {
                return 0.0;
            }
        }
        match self
            .times
            .binary_search_by(|probe| probe.partial_cmp(&t).unwrap())
        {
            Ok(k) => self.xi[k],
            Err(0) => self.xi[0],
            Err(k) => self.xi[k - 1],
        }
    }
}

/// Deterministic coupled-pair simulation on random stream `stream` (ensemble
/// trajectory i uses stream i). When `supermartingale_d1` is set, the
/// integral of 2ψ'_{D₁}(ξ) is accumulated along the path and stored with
/// each record.
pub fn simulate<const N: usize, F, G>(
    field: &F,
    geom: &G,
    cfg: &SimConfig,
    x0: &Point<N>,
    y0: &Point<N>,
    stream: u64,
    supermartingale_d1: Option<f64>,
) -> Result<CouplingTrajectory, CouplingError>
where
    F: DriftField<N>,
    G: Geometry<N>,
{
    let mut sink = NoObserver;
    simulate_inner(
        field,
        geom,
        cfg,
        x0,
        y0,
        stream,
        supermartingale_d1,
        &mut sink,
    )
}

/// As [`simulate`], additionally recording `(obs(X), obs(Y))` at each record.
pub fn simulate_observed<const N: usize, F, G, O>(
    field: &F,
    geom: &G,
    cfg: &SimConfig,
    x0: &Point<N>,
    y0: &Point<N>,
    stream: u64,
    observable: &O,
) -> Result<(CouplingTrajectory, Vec<[f64; 2]>), CouplingError>
where
    F: DriftField<N>,
    G: Geometry<N>,
    O: Fn(&Point<N>) -> Result<f64, FieldError>,
{
    let mut sink = ObsRecorder {
        observable,
        values: Vec::new(),
        error: None,
    };
    let traj = simulate_inner(field, geom, cfg, x0, y0, stream, None, &mut sink)?;
    if let Some(e) = sink.error {
        return Err(e.into());
    }
    Ok((traj, sink.values))
}

trait Observer<const N: usize> {
    fn record(&mut self, x: &Point<N>, y: &Point<N>);
}

struct NoObserver;

impl<const N: usize> Observer<N> for NoObserver {
    fn record(&mut self, _x: &Point<N>, _y: &Point<N>) {}
}

struct ObsRecorder<'a, O> {
    observable: &'a O,
    values: Vec<[f64; 2]>,
    error: Option<FieldError>,
}

impl<'a, const N: usize, O> Observer<N> for ObsRecorder<'a, O>
where
    O: Fn(&Point<N>) -> Result<f64, FieldError>,
{
    fn record(&mut self, x: &Point<N>, y: &Point<N>) {
        if self.error.is_some() {
            return;
        }
        match ((self.observable)(x), (self.observable)(y)) {
            (Ok(a), Ok(b)) => self.values.push([a, b]),
            (Err(e), _) | (_, Err(e)) => self.error = Some(e),
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn simulate_inner<const N: usize, F, G, OBS>(
    field: &F,
    geom: &G,
    cfg: &SimConfig,
    x0: &Point<N>,
    y0: &Point<N>,
    stream: u64,
    supermartingale_d1: Option<f64>,
    observer: &mut OBS,
) -> Result<CouplingTrajectory, CouplingError>
where
    F: DriftField<N>,
    G: Geometry<N>,
    OBS: Observer<N>,
{
    cfg.validate()?;
    if !geom.contains(x0) || !geom.contains(y0) {
        return Err(CouplingError::InvalidStart("start points must be interior"));
    }
    let rho0 = geom
        .boundary_distance(x0)
        .map_err(|_| CouplingError::InvalidStart("start outside closure"))?
        .min(
            geom.boundary_distance(y0)
                .map_err(|_| CouplingError::InvalidStart("start outside closure"))?,
        );
    if rho0 < 2.0 * cfg.delta {
        return Err(CouplingError::InvalidStart(
            "start must keep distance 2*delta from the boundary",
        ));
    }

    let mut rng = stream_rng(cfg.seed, stream);
    let sqrt2 = core::f64::consts::SQRT_2;

    let mut x = *x0;
    let mut y = *y0;
    let mut t = 0.0f64;
    let mut psi_int_acc = 0.0f64;
    let mut steps: u64 = 0;

    let mut times = Vec::new();
    let mut xis = Vec::new();
    let mut chords = Vec::new();
    let mut psi_ints = supermartingale_d1.map(|_| Vec::new());

    let chord_or_zero = |x: &Point<N>, y: &Point<N>| -> Result<f64, CouplingError> {
        match field.chord_diff(x, y) {
            Ok(f) => Ok(f),
            Err(FieldError::CoincidentPoints) => Ok(0.0),
            Err(e) => Err(e.into()),
        }
    };

    // t = 0 record.
    let xi0 = 0.5 * vecn::dist(&x, &y);
    times.push(0.0);
    xis.push(xi0);
    chords.push(chord_or_zero(&x, &y)?);
    if let Some(v) = psi_ints.as_mut() {
        v.push(0.0);
    }
    observer.record(&x, &y);

    if 2.0 * xi0 <= cfg.eta {
        return Ok(CouplingTrajectory {
            times,
            xi: xis,
            chord: chords,
            psi_integral: psi_ints,
            outcome: Outcome::Coupled { tau: 0.0 },
            final_time: 0.0,
        });
    }

    let mut outcome = Outcome::Horizon;
    'time_loop: while t < cfg.horizon - 0.5 * cfg.dt {
        // Propose with the full step; halve on exit until the substep fits.
        let mut dt_try = cfg.dt;
        let (xp, yp) = loop {
            let mut db = [0.0; N];
            let scale = dt_try.sqrt();
            for slot in db.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *slot = scale * z;
            }
            let refl = Reflection::new(&x, &y)?;
            let gx = field.log_gradient(&x)?;
            let gy = field.log_gradient(&y)?;
            let mdb = refl.apply(&db);
            let mut xp = x;
            let mut yp = y;
            for k in 0..N {
                xp[k] += sqrt2 * db[k] + 2.0 * gx[k] * dt_try;
                yp[k] += sqrt2 * mdb[k] + 2.0 * gy[k] * dt_try;
            }
            if geom.contains(&xp) && geom.contains(&yp) {
                break (xp, yp);
            }
            dt_try *= 0.5;
            if (cfg.dt / dt_try) as u32 > 1 << MAX_STEP_RETRIES {
                outcome = Outcome::Boundary { sigma: t };
                break 'time_loop;
            }
        };

        if let Some(d1) = supermartingale_d1 {
            let xi = 0.5 * vecn::dist(&x, &y);
            // ξ < D/2 < D₁/2 keeps ψ' off its pole.
            let p = psi_prime(d1, xi.min(0.4999 * d1)).map_err(CouplingError::from)?;
            psi_int_acc += 2.0 * p * dt_try;
        }

        x = xp;
        y = yp;
        t += dt_try;
        steps += 1;

        let xi = 0.5 * vecn::dist(&x, &y);
        if 2.0 * xi <= cfg.eta {
            outcome = Outcome::Coupled { tau: t };
            break;
        }
        let rho = match (geom.boundary_distance(&x), geom.boundary_distance(&y)) {
            (Ok(a), Ok(b)) => a.min(b),
            _ => 0.0,
        };
        if rho <= cfg.delta {
            outcome = Outcome::Boundary { sigma: t };
            break;
        }
        if steps.is_multiple_of(cfg.record_stride as u64) {
            times.push(t);
            xis.push(xi);
            chords.push(chord_or_zero(&x, &y)?);
            if let Some(v) = psi_ints.as_mut() {
                v.push(psi_int_acc);
            }
            observer.record(&x, &y);
        }
    }

    // Stop-time record with the measured state.
    if *times.last().unwrap() < t {
        times.push(t);
        xis.push(0.5 * vecn::dist(&x, &y));
        chords.push(chord_or_zero(&x, &y)?);
        if let Some(v) = psi_ints.as_mut() {
            v.push(psi_int_acc);
        }
        observer.record(&x, &y);
    }

    Ok(CouplingTrajectory {
        times,
        xi: xis,
        chord: chords,
        psi_integral: psi_ints,
        outcome,
        final_time: t,
    })
}

/// Serial ensemble; trajectory `i` uses random stream `i`, so a parallel
/// driver that assigns streams the same way reproduces it exactly.
pub fn simulate_ensemble<const N: usize, F, G>(
    field: &F,
    geom: &G,
    cfg: &SimConfig,
    x0: &Point<N>,
    y0: &Point<N>,
    supermartingale_d1: Option<f64>,
) -> Result<Vec<CouplingTrajectory>, CouplingError>
where
    F: DriftField<N>,
    G: Geometry<N>,
{
    (0..cfg.n_traj as u64)
        .map(|i| simulate(field, geom, cfg, x0, y0, i, supermartingale_d1))
        .collect()
}

// ---------------------------------------------------------------------------
// Frozen-state single-step statistics
// ---------------------------------------------------------------------------

/// Ensemble statistics of the one-step ξ increment at a frozen state,
/// compared with the drift the separation equation predicts.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepStats {
    /// Empirical mean of Δξ/dt.
    pub mean_rate: f64,
    /// Standard error of the mean rate.
    pub stderr_rate: f64,
    /// Empirical variance of Δξ.
    pub variance: f64,
    /// Predicted drift F(x, y).
    pub predicted_rate: f64,
    /// Predicted variance 2 dt.
    pub predicted_variance: f64,
    pub n: u64,
    pub dt: f64,
}

/// Run `n` independent single steps from the frozen pair state and collect
/// the increment statistics of ξ.
pub fn frozen_step_stats<const N: usize, F, R>(
    field: &F,
    x: &Point<N>,
    y: &Point<N>,
    dt: f64,
    n: u64,
    rng: &mut R,
) -> Result<StepStats, CouplingError>
where
    F: DriftField<N>,
    R: Rng + ?Sized,
{
    let xi0 = 0.5 * vecn::dist(x, y);
    if xi0 < MIN_SEPARATION {
        return Err(CouplingError::InvalidStart("frozen pair must be separated"));
    }
    let predicted = field.chord_diff(x, y)?;
    let scale = dt.sqrt();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..n {
        let mut db = [0.0; N];
        for slot in db.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *slot = scale * z;
        }
        let (xp, yp) = step_pair(field, x, y, dt, &db)?;
        let dxi = 0.5 * vecn::dist(&xp, &yp) - xi0;
        sum += dxi;
        sum_sq += dxi * dxi;
    }
    let nf = n as f64;
    let mean = sum / nf;
    let var = (sum_sq - nf * mean * mean) / (nf - 1.0);
    Ok(StepStats {
        mean_rate: mean / dt,
        stderr_rate: (var / nf).sqrt() / dt,
        variance: var,
        predicted_rate: predicted,
        predicted_variance: 2.0 * dt,
        n,
        dt,
    })
}
