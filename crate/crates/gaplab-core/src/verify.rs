//! Top-level verifiers: each maps one quantitative inequality to a pass/fail
//! report with a margin and an explicit tolerance budget.
//!
//! The inequalities are exact; the computed quantities are discretized. Every
//! report therefore records the grid spacing, time step, seeds, and the
//! tolerance formula used, so a failure is auditable. Negative controls (a
//! falsified bound must FAIL) live in the test suites.

use alloc::vec::Vec;

use crate::coupling::{CouplingTrajectory, Outcome, StepStats};
use crate::domain::Geometry;
use crate::eigensolver::{Eigen1d, GroundState};
use crate::groundfield::{boundary_profile, psi, DriftField, GridField2};
use crate::report::VerificationReport;
use crate::vecn::{self, Point};

#[allow(unused_imports)]
use crate::math::F64Ext;

use core::f64::consts::PI;

/// The conjectured lower bound 3π²/D² on the spectral gap.
pub fn gap_bound(diameter: f64) -> f64 {
    3.0 * PI * PI / (diameter * diameter)
}

/// How the Dirichlet boundary is represented on the grid; fixes the
/// discretization-error model for the gap tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DiscretizationClass {
    /// Boundary lies on lattice lines: second-order eigenvalue error.
    AlignedRectangle { min_side: f64 },
    /// Curved boundary under plain Dirichlet padding: first-order error.
    CurvedBoundary,
}

/// Tolerance budget for the 2D gap check.
pub fn gap_tolerance_2d(
    lambda0: f64,
    lambda1: f64,
    h: f64,
    diameter: f64,
    class: DiscretizationClass,
) -> f64 {
    match class {
        DiscretizationClass::AlignedRectangle { min_side } => {
            (lambda0 + lambda1) * (PI * h / min_side) * (PI * h / min_side) / 3.0
        }
        DiscretizationClass::CurvedBoundary => 4.0 * h * (lambda0 + lambda1) / diameter,
    }
}

/// Tolerance budget for the 1D gap check (second-order stencil, exact ends).
pub fn gap_tolerance_1d(h: f64, length: f64) -> f64 {
    2.0 * PI.powi(4) * h * h / length.powi(4)
}

/// λ₁ - λ₀ ≥ 3π²/D² from the 2D eigensolve.
pub fn verify_gap_2d(
    gs: &GroundState,
    diameter: f64,
    class: DiscretizationClass,
) -> VerificationReport {
    let h = gs.grid().spacing();
    let gap = gs.gap();
    let bound = gap_bound(diameter);
    let tol = gap_tolerance_2d(gs.lambda0, gs.lambda1, h, diameter, class);
    let mut r = VerificationReport::evaluate("spectral_gap_bound", gap - bound, tol, 1);
    r.push_meta("lambda0", gs.lambda0);
    r.push_meta("lambda1", gs.lambda1);
    r.push_meta("gap", gap);
    r.push_meta("bound", bound);
    r.push_meta("h", h);
    r.push_meta("diameter", diameter);
    r.push_meta(
        "tolerance_model",
        match class {
            DiscretizationClass::AlignedRectangle { .. } => "aligned_second_order",
            DiscretizationClass::CurvedBoundary => "curved_first_order",
        },
    );
    r
}

/// λ₁ - λ₀ ≥ 3π²/D² from the interval eigensolve.
pub fn verify_gap_1d(eig: &Eigen1d, length: f64) -> VerificationReport {
    let h = eig.grid().spacing();
    let gap = eig.gap();
    let bound = gap_bound(length);
    let tol = gap_tolerance_1d(h, length);
    let mut r = VerificationReport::evaluate("spectral_gap_bound", gap - bound, tol, 1);
    r.push_meta("lambda0", eig.lambda0);
    r.push_meta("lambda1", eig.lambda1);
    r.push_meta("gap", gap);
    r.push_meta("bound", bound);
    r.push_meta("h", h);
    r.push_meta("diameter", length);
    r.push_meta("tolerance_model", "interval_second_order");
    r
}

/// Log-concavity modulus: F(x, y) ≤ 2ψ_D(|x-y|/2) + tolerance over a pair
/// sweep. `diameter` is a parameter so a deliberately tightened (false)
/// bound can be used as a negative control.
pub fn verify_log_concavity_modulus<const N: usize, F: DriftField<N>>(
    field: &F,
    diameter: f64,
    pairs: &[(Point<N>, Point<N>)],
    tolerance: f64,
) -> VerificationReport {
    let mut margin = f64::INFINITY;
    let mut violations = 0u64;
    let mut used = 0u64;
    for (x, y) in pairs {
        let xi = 0.5 * vecn::dist(x, y);
        let Ok(f) = field.chord_diff(x, y) else {
            continue;
        };
        // Beyond the pole the comparison profile is -infinity: certain violation.
        let rhs = psi(diameter, xi).map(|p| 2.0 * p).unwrap_or(f64::NEG_INFINITY);
        let m = rhs - f;
        margin = margin.min(m);
        used += 1;
        if m < -tolerance {
            violations += 1;
        }
    }
    if used == 0 {
        return VerificationReport::failed("log_concavity_modulus", "no usable pairs");
    }
    let mut r = VerificationReport::evaluate("log_concavity_modulus", margin, tolerance, used);
    r.push_meta("violations", violations);
    r.push_meta("diameter", diameter);
    r
}

// ---------------------------------------------------------------------------
// Contraction of E sin(πξ_t/D)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ContractionRow {
    pub t: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionCheck {
    /// E sin(πξ_t/D) ≤ exp(-3π²t/D²) sin(πξ₀/D) + 3·stderr at every time.
    pub domination: VerificationReport,
    /// Fitted decay rate ≥ 3π²/D² - CI.
    pub rate: VerificationReport,
    pub rows: Vec<ContractionRow>,
    pub fitted_rate: f64,
    pub rate_stderr: f64,
}

/// Least squares y = a + b x; returns (b, a, stderr_b).
fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for k in 0..xs.len() {
        sxx += (xs[k] - mx) * (xs[k] - mx);
        sxy += (xs[k] - mx) * (ys[k] - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss_res = 0.0;
    for k in 0..xs.len() {
        let r = ys[k] - (intercept + slope * xs[k]);
        ss_res += r * r;
    }
    let dof = (xs.len().max(3) - 2) as f64;
    let stderr = (ss_res / dof / sxx).sqrt();
    (slope, intercept, stderr)
}

/// Monte Carlo check of the sine contraction along recorded times.
pub fn verify_contraction(
    diameter: f64,
    trajectories: &[CouplingTrajectory],
    times: &[f64],
) -> ContractionCheck {
    let n = trajectories.len() as f64;
    let xi0 = trajectories
        .first()
        .map(|t| t.xi[0])
        .unwrap_or(0.0);
    let start = (PI * xi0 / diameter).sin();
    let rate_bound = 3.0 * PI * PI / (diameter * diameter);

    let mut rows = Vec::with_capacity(times.len());
    let mut margin = f64::INFINITY;
    for &t in times {
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for traj in trajectories {
            let s = (PI * traj.xi_at(t) / diameter).sin();
            sum += s;
            sum_sq += s * s;
        }
        let mean = sum / n;
        let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        let stderr = (var / n).sqrt();
        let bound = (-rate_bound * t).exp() * start;
        rows.push(ContractionRow {
            t,
            estimate: mean,
            stderr,
            bound,
        });
        margin = margin.min(bound + 3.0 * stderr - mean);
    }

    // Tolerance covers accumulation rounding at t = 0, where the estimate
    // equals the bound exactly and the standard error vanishes.
    let mut domination = VerificationReport::evaluate(
        "sine_contraction_domination",
        margin,
        1e-12,
        trajectories.len() as u64,
    );
    domination.push_meta("diameter", diameter);
    domination.push_meta("xi0", xi0);
    domination.push_meta("times", times.len());

    // Rate fit on the window where the signal is resolved.
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for row in &rows {
        if row.estimate > (5.0 * row.stderr).max(1e-12) {
            xs.push(row.t);
            ys.push(row.estimate.ln());
        }
    }
    let (fitted_rate, rate_stderr, rate_report) = if xs.len() >= 3 {
        let (slope, _b, se) = linear_fit(&xs, &ys);
        let rate = -slope;
        let ci = 3.0 * se;
        let mut r = VerificationReport::evaluate(
            "sine_contraction_rate",
            rate - (rate_bound - ci),
            0.0,
            xs.len() as u64,
        );
        r.push_meta("fitted_rate", rate);
        r.push_meta("rate_stderr", se);
        r.push_meta("rate_bound", rate_bound);
        (rate, se, r)
    } else {
        (
            f64::NAN,
            f64::NAN,
            VerificationReport::failed("sine_contraction_rate", "too few resolved times to fit"),
        )
    };

    ContractionCheck {
        domination,
        rate: rate_report,
        rows,
        fitted_rate,
        rate_stderr,
    }
}

// ---------------------------------------------------------------------------
// Supermartingale drift of the compensated chord process
// ---------------------------------------------------------------------------

/// Empirical drift of G_t = [F_t - 2ψ_{D₁}(ξ_t)] exp(∫ 2ψ'_{D₁}(ξ_s) ds):
/// ensemble-mean increments over recorded steps must be ≥ -3 standard errors.
/// Trajectories contribute increments up to their stopping time.
pub fn supermartingale_check(
    trajectories: &[CouplingTrajectory],
    d1: f64,
) -> VerificationReport {
    // Pool increments by record-interval index.
    let max_len = trajectories.iter().map(|t| t.times.len()).max().unwrap_or(0);
    if max_len < 2 {
        return VerificationReport::failed("supermartingale_drift", "no recorded intervals");
    }
    let mut margin = f64::INFINITY;
    let mut intervals = 0u64;
    let mut worst_mean = f64::NAN;
    for k in 0..max_len - 1 {
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut count = 0u64;
        for traj in trajectories {
            if traj.times.len() <= k + 1 {
                continue;
            }
            let ints = traj
                .psi_integral
                .as_ref()
                .expect("supermartingale_check needs psi_integral records");
            let g = |i: usize| -> Option<f64> {
                let p = psi(d1, traj.xi[i]).ok()?;
                Some((traj.chord[i] - 2.0 * p) * ints[i].exp())
            };
            let (Some(g0), Some(g1)) = (g(k), g(k + 1)) else {
                continue;
            };
            let dg = g1 - g0;
            sum += dg;
            sum_sq += dg * dg;
            count += 1;
        }
        if count < 30 {
            continue;
        }
        let n = count as f64;
        let mean = sum / n;
        let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        let stderr = (var / n).sqrt();
        let m = mean + 3.0 * stderr;
        if m < margin {
            margin = m;
            worst_mean = mean;
        }
        intervals += 1;
    }
    if intervals == 0 {
        return VerificationReport::failed("supermartingale_drift", "no populated intervals");
    }
    let mut r = VerificationReport::evaluate(
        "supermartingale_drift",
        margin,
        0.0,
        trajectories.len() as u64,
    );
    r.push_meta("d1", d1);
    r.push_meta("intervals", intervals);
    r.push_meta("worst_interval_mean", worst_mean);
    r
}

// ---------------------------------------------------------------------------
// Coupling-based gap estimate from the ratio observable
// ---------------------------------------------------------------------------

/// Observable records of one ensemble: per trajectory, `[v(X), v(Y)]` aligned
/// with the trajectory's record times.
pub struct PairEnsemble {
    pub trajectories: Vec<CouplingTrajectory>,
    pub observables: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapEstimate {
    /// rate ≥ 3π²/D² - CI.
    pub lower_bound: VerificationReport,
    /// Agreement with the eigensolver gap, when a reference is supplied.
    pub vs_reference: Option<VerificationReport>,
    pub rate: f64,
    pub rate_stderr: f64,
    pub per_pair_rates: Vec<f64>,
}

/// Decay rate of |E v₀(X_t) - E v₀(Y_t)| across start pairs: a probabilistic
/// estimate of the spectral gap.
pub fn estimate_gap_from_coupling(
    ensembles: &[PairEnsemble],
    diameter: f64,
    times: &[f64],
    reference_gap: Option<(f64, f64)>, // (gap, relative tolerance)
) -> GapEstimate {
    let mut rates = Vec::new();
    let mut weights = Vec::new();
    for ens in ensembles {
        let n = ens.trajectories.len();
        if n == 0 {
            continue;
        }
        // Mean paired difference at each nominal time.
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for &t in times {
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for (traj, obs) in ens.trajectories.iter().zip(&ens.observables) {
                // After a coupling the copies coincide: the paired difference
                // is identically zero, adding nothing to either sum.
                if let Outcome::Coupled { tau } = traj.outcome {
                    if t >= tau {
                        continue;
                    }
                }
                // Latest record at or before t.
                let k = match traj
                    .times
                    .binary_search_by(|probe| probe.partial_cmp(&t).unwrap())
                {
                    Ok(k) => k,
                    Err(0) => 0,
                    Err(k) => k - 1,
                };
                if k < obs.len() {
                    let diff = obs[k][0] - obs[k][1];
                    sum += diff;
                    sum_sq += diff * diff;
                }
            }
            let nf = n as f64;
            let mean = sum / nf;
            let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
            let stderr = (var / nf).sqrt();
            if mean.abs() > (5.0 * stderr).max(1e-12) {
                xs.push(t);
                ys.push(mean.abs().ln());
            }
        }
        if xs.len() >= 3 {
            let (slope, _a, se) = linear_fit(&xs, &ys);
            rates.push(-slope);
            let w = 1.0 / (se * se).max(1e-12);
            weights.push(w);
        }
    }
    if rates.is_empty() {
        return GapEstimate {
            lower_bound: VerificationReport::failed(
                "coupling_gap_lower_bound",
                "no pair produced a resolvable decay",
            ),
            vs_reference: None,
            rate: f64::NAN,
            rate_stderr: f64::NAN,
            per_pair_rates: rates,
        };
    }
    let wsum: f64 = weights.iter().sum();
    let rate: f64 = rates
        .iter()
        .zip(&weights)
        .map(|(r, w)| r * w / wsum)
        .sum();
    let rate_stderr = (1.0 / wsum).sqrt();

    let bound = gap_bound(diameter);
    let ci = 3.0 * rate_stderr;
    let mut lower = VerificationReport::evaluate(
        "coupling_gap_lower_bound",
        rate - (bound - ci),
        0.0,
        rates.len() as u64,
    );
    lower.push_meta("rate", rate);
    lower.push_meta("rate_stderr", rate_stderr);
    lower.push_meta("bound", bound);

    let vs_reference = reference_gap.map(|(gap, rel_tol)| {
        let rel = (rate - gap).abs() / gap;
        let mut r = VerificationReport::evaluate(
            "coupling_gap_vs_eigensolver",
            rel_tol - rel,
            0.0,
            rates.len() as u64,
        );
        r.push_meta("rate", rate);
        r.push_meta("eigensolver_gap", gap);
        r.push_meta("relative_deviation", rel);
        r
    });

    GapEstimate {
        lower_bound: lower,
        vs_reference,
        rate,
        rate_stderr,
        per_pair_rates: rates,
    }
}

// ---------------------------------------------------------------------------
// Boundary probes: drift condition and chord divergence
// ---------------------------------------------------------------------------

/// Drift condition for boundary avoidance: ρ <2∇log φ₀, ∇ρ> must exceed 1.5
/// on the innermost valid band and trend towards its limit 2.
///
/// "Trend" is witnessed on the band that is both resolved and near the wall
/// (6h ≤ ρ ≤ 0.05 diameter): there the doubled product must sit within 0.2
/// of 2. Coarser grids cannot populate that band and only the level check
/// binds. On the innermost band only the 1.5 level is required, because the
/// plain Dirichlet padding shifts the effective boundary by O(h) and biases
/// ρ-scaled products down by O(h/ρ).
pub fn verify_drift_condition<G: Geometry<2>>(
    field: &GridField2<'_, G>,
    anchors: &[(Point<2>, Point<2>)],
    rhos: &[f64],
    inner_band: f64,
) -> VerificationReport {
    let profile = boundary_profile(field, anchors, rhos);
    if profile.probes.is_empty() {
        return VerificationReport::failed("boundary_drift_condition", "no valid probes");
    }
    let trend_lo = 6.0 * field.spacing();
    let trend_hi = 0.05 * field.geometry().diameter();
    let mut margin = f64::INFINITY;
    let mut inner_used = 0u64;
    let mut trend_dev: f64 = 0.0;
    for p in &profile.probes {
        if p.rho <= inner_band {
            margin = margin.min(2.0 * p.normal_product - 1.5);
            inner_used += 1;
        }
        if p.rho >= trend_lo && p.rho <= trend_hi {
            trend_dev = trend_dev.max((2.0 * p.normal_product - 2.0).abs());
        }
    }
    if inner_used == 0 {
        return VerificationReport::failed(
            "boundary_drift_condition",
            "no probes inside the requested band",
        );
    }
    let trend_ok = trend_dev <= 0.2;
    let inner = profile.probes.last().unwrap();
    let mut r = VerificationReport::evaluate(
        "boundary_drift_condition",
        if trend_ok { margin } else { margin.min(-1.0) },
        0.0,
        profile.lines,
    );
    r.push_meta("inner_band", inner_band);
    r.push_meta("inner_value", 2.0 * inner.normal_product);
    r.push_meta("trend_band_deviation", trend_dev);
    r.push_meta("limit", 2.0);
    r.push_meta("trend_ok", trend_ok);
    r
}

/// Near-boundary chord divergence: with y fixed in the bulk and x swept down
/// a normal line, F(x, y) against log(1/ρ(x)) must have slope ≤ -c < 0.
/// The fitted constants are reported, not asserted.
pub fn boundary_divergence_profile<const N: usize, F: DriftField<N>>(
    field: &F,
    y: &Point<N>,
    sweep: &[(f64, Point<N>)], // (rho, x) stations, decreasing rho
    slope_floor: f64,
) -> VerificationReport {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (rho, x) in sweep {
        if let Ok(f) = field.chord_diff(x, y) {
            xs.push(-rho.ln());
            ys.push(f);
        }
    }
    if xs.len() < 3 {
        return VerificationReport::failed("boundary_chord_divergence", "sweep too short");
    }
    let (slope, intercept, se) = linear_fit(&xs, &ys);
    let mut r = VerificationReport::evaluate(
        "boundary_chord_divergence",
        -slope - slope_floor,
        0.0,
        xs.len() as u64,
    );
    r.push_meta("slope", slope);
    r.push_meta("intercept", intercept);
    r.push_meta("slope_stderr", se);
    r.push_meta("slope_floor", slope_floor);
    r
}

/// Near-diagonal control: F over pairs with |x-y| ≤ 0.05 D stays below a
/// small epsilon (continuity scan; log-concavity makes the true value ≤ 0).
pub fn near_diagonal_scan<const N: usize, F: DriftField<N>>(
    field: &F,
    pairs: &[(Point<N>, Point<N>)],
    epsilon: f64,
) -> VerificationReport {
    let mut max_f = f64::NEG_INFINITY;
    let mut used = 0u64;
    for (x, y) in pairs {
        if let Ok(f) = field.chord_diff(x, y) {
            max_f = max_f.max(f);
            used += 1;
        }
    }
    if used == 0 {
        return VerificationReport::failed("near_diagonal_chord", "no usable pairs");
    }
    let mut r = VerificationReport::evaluate("near_diagonal_chord", epsilon - max_f, 0.0, used);
    r.push_meta("epsilon", epsilon);
    r.push_meta("max_chord_diff", max_f);
    r
}

/// The sine comparison feeding the coupling gap bound: sin(πz/D) ≥ 2z/D on [0, D/2].
pub fn sin_chord_inequality(diameter: f64, n: usize) -> VerificationReport {
    let mut margin = f64::INFINITY;
    for k in 0..=n {
        let z = 0.5 * diameter * k as f64 / n as f64;
        margin = margin.min((PI * z / diameter).sin() - 2.0 * z / diameter);
    }
    VerificationReport::evaluate("sine_chord_inequality", margin, 1e-12, (n + 1) as u64)
}

/// Criterion pair for the one-step ξ dynamics at a frozen state: the
/// empirical drift matches F(x,y) within 3 standard errors, and the increment
/// variance matches 2dt within 5% relative.
pub fn xi_dynamics_reports(stats: &StepStats) -> (VerificationReport, VerificationReport) {
    let drift_diff = (stats.mean_rate - stats.predicted_rate).abs();
    let mut drift = VerificationReport::evaluate(
        "xi_step_drift",
        3.0 * stats.stderr_rate - drift_diff,
        0.0,
        stats.n,
    );
    drift.push_meta("mean_rate", stats.mean_rate);
    drift.push_meta("predicted_rate", stats.predicted_rate);
    drift.push_meta("stderr", stats.stderr_rate);
    drift.push_meta("dt", stats.dt);

    let rel = (stats.variance / stats.predicted_variance - 1.0).abs();
    let mut var = VerificationReport::evaluate("xi_step_variance", 0.05 - rel, 0.0, stats.n);
    var.push_meta("variance", stats.variance);
    var.push_meta("predicted_variance", stats.predicted_variance);
    var.push_meta("relative_deviation", rel);
    (drift, var)
}
